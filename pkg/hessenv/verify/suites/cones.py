import numpy as np

from ...cones import in_cone, in_tilde_cone, subsolution_check
from ...eigen_ops import EigenOperator
from ...torus import HermitianFormField, PeriodicGrid
from ..sampling import catalog, cone_points, random_trig
from ..types import CheckOutcome, PropertySpec

# f_∞ is finite for the quotient, so σ0 comes from the margin
_BOUNDED = EigenOperator("hessian_quotient", 2, 2, 1)
_GRID = PeriodicGrid(2, 8)


def check_tilde_is_cone(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """Γ̃ is closed under positive scaling and under adding Γ_n."""
    failures = 0
    worst = None
    for op in catalog():
        mu = rng.uniform(-3.0, 3.0, (samples, op.n))
        inside = np.asarray(in_tilde_cone(op, mu))
        mu = mu[inside]
        if not len(mu):
            continue
        t = rng.uniform(0.1, 10.0, (len(mu), 1))
        nu = rng.uniform(0.0, 2.0, mu.shape)
        scaled = np.asarray(in_tilde_cone(op, t * mu))
        shifted = np.asarray(in_tilde_cone(op, mu + nu))
        bad = ~(scaled & shifted)
        failures += int(bad.sum())
        if bad.any() and worst is None:
            worst = {"operator": str(op), "mu": mu[int(np.argmax(bad))].tolist()}
    return CheckOutcome(failures == 0, {"failures": failures}, worst)


def check_gamma_in_tilde(rng: np.random.Generator, samples: int) -> CheckOutcome:
    failures = 0
    for op in catalog():
        lam = cone_points(op, rng, samples)
        failures += int((~np.asarray(in_tilde_cone(op, lam))).sum())
    return CheckOutcome(failures == 0, {"failures": failures})


def check_cone_convex_symmetric(rng: np.random.Generator, samples: int) -> CheckOutcome:
    failures = 0
    for op in catalog():
        a = cone_points(op, rng, samples)
        b = cone_points(op, rng, samples)
        s = rng.uniform(0, 1, (samples, 1))
        convex = np.asarray(in_cone(op.cone, s * a + (1 - s) * b).inside)
        perm = rng.permuted(np.tile(np.arange(op.n), (samples, 1)), axis=1)
        symmetric = np.asarray(in_cone(op.cone, np.take_along_axis(a, perm, axis=1)).inside)
        failures += int((~convex).sum() + (~symmetric).sum())
    return CheckOutcome(failures == 0, {"failures": failures})


def _sample_case(rng: np.random.Generator):
    theta = HermitianFormField.identity(_GRID)
    u_sub = random_trig(_GRID, rng, amplitude=0.001)
    h = random_trig(_GRID, rng, amplitude=0.1) + rng.uniform(0.0, 0.6)
    return theta, u_sub, h


def check_certificate_monotone(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """Raising h never turns a rejection into an acceptance, and σ0 drops with it."""
    failures = 0
    worst = None
    for _ in range(samples):
        theta, u_sub, h = _sample_case(rng)
        d = float(rng.uniform(0.0, 0.5))
        low = subsolution_check(_BOUNDED, theta, u_sub, h)
        high = subsolution_check(_BOUNDED, theta, u_sub, h + d)
        bad = (high.accepted and not low.accepted) or high.sigma_0 > low.sigma_0 + 1e-12
        if bad:
            failures += 1
            worst = worst or {"shift": d, "low": low.to_dict(), "high": high.to_dict()}
    return CheckOutcome(failures == 0, {"failures": failures}, worst)


def check_certificate_stability(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """An accepted certificate still holds for h + σ0."""
    failures = 0
    accepted = 0
    worst = None
    for _ in range(samples):
        theta, u_sub, h = _sample_case(rng)
        cert = subsolution_check(_BOUNDED, theta, u_sub, h)
        if not cert.accepted:
            continue
        accepted += 1
        if not subsolution_check(_BOUNDED, theta, u_sub, h + cert.sigma_0).accepted:
            failures += 1
            worst = worst or cert.to_dict()
    return CheckOutcome(
        failures == 0 and accepted > 0, {"failures": failures, "accepted": accepted}, worst
    )


tests: list[PropertySpec] = [
    {"name": "tilde-is-cone", "check": check_tilde_is_cone, "samples": 500, "seed": 11},
    {"name": "gamma-in-tilde", "check": check_gamma_in_tilde, "samples": 500, "seed": 12},
    {"name": "convex-symmetric", "check": check_cone_convex_symmetric, "samples": 1000, "seed": 13},
    {"name": "certificate-monotone", "check": check_certificate_monotone, "samples": 20, "seed": 14},
    {"name": "certificate-stability", "check": check_certificate_stability, "samples": 20, "seed": 15},
]
