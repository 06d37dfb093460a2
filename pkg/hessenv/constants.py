"""
Constants
"""

# Newton defaults
MAX_NEWTON_ITERS = 50
RESIDUAL_TOL = 1e-10
CONE_MARGIN = 1e-8
DAMPING = 0.5
KRYLOV_TOL = 1e-3
MAX_BACKTRACKS = 30

# regularization schedule for degenerate right-hand sides (h + eps)
EPS_REG_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4)

# penalization schedule for envelopes, ratio 1/10 between rungs
EPS_ENVELOPE_SCHEDULE = (1e-1, 1e-2, 1e-3)
CONTACT_TOL_FACTOR = 10.0
BARRIER_DELTA = 0.05

# relative threshold under which two eigenvalues are treated as equal
TIE_THRESHOLD = 1e-8

# Trudinger cone bisection cap is TILDE_T_SCALE * (1 + |mu|)
TILDE_T_SCALE = 1e6
TILDE_BISECTIONS = 200

# oracle defaults
PSOR_OMEGA = 1.8
PSOR_TOL = 1e-10
PSOR_MAX_SWEEPS = 100_000
FD_STEP = 1e-5
BRUTEFORCE_MAX_N = 20

# maximum-principle monitor constant A in e^{-Au}
MONITOR_A = 1.0

# exit codes
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3
EXIT_PROPERTY_FAILURE = 1
