from .__version__ import __version__
from .cones import ConeSpec, SubsolutionCertificate, in_cone, in_tilde_cone, subsolution_check
from .eigen_ops import EigenOperator, f_eval, f_grad, f_hessian, f_inf, sigma_m
from .envelope import EnvelopeConfig, EnvelopeResult, compute_envelope, contact_set
from .errors import (
    ConeViolation,
    DivergenceError,
    DomainError,
    HessenvError,
    NonConvergenceError,
)
from .solver import (
    SolveReport,
    SolverConfig,
    solve_degenerate,
    solve_eigenpair,
    solve_nondegenerate,
)
from .torus import HermitianFormField, PeriodicGrid, ScalarField

__all__ = [
    "ConeSpec",
    "ConeViolation",
    "DivergenceError",
    "DomainError",
    "EigenOperator",
    "EnvelopeConfig",
    "EnvelopeResult",
    "HermitianFormField",
    "HessenvError",
    "NonConvergenceError",
    "PeriodicGrid",
    "ScalarField",
    "SolveReport",
    "SolverConfig",
    "SubsolutionCertificate",
    "compute_envelope",
    "contact_set",
    "f_eval",
    "f_grad",
    "f_hessian",
    "f_inf",
    "in_cone",
    "in_tilde_cone",
    "sigma_m",
    "solve_degenerate",
    "solve_eigenpair",
    "solve_nondegenerate",
    "subsolution_check",
]
__version__ = __version__
