from functools import lru_cache

import numpy as np

from ...envelope import EnvelopeResult, compute_envelope, contact_set, mask_mismatch
from ...oracles import psor_obstacle
from ...torus import ScalarField, trig_field
from ..sampling import linear_obstacle_case
from ..types import CheckOutcome, PropertySpec

_TOL = 1e-8


@lru_cache
def bundled_run() -> EnvelopeResult:
    theta, h = linear_obstacle_case()
    return compute_envelope(theta, h, m=1)


@lru_cache
def psor_reference() -> ScalarField:
    theta, h = linear_obstacle_case()
    return psor_obstacle(theta, h)


def check_psor_agreement(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """P within 5e-3 of the projected-SOR envelope, contact masks within two cells per edge."""
    result = bundled_run()
    assert result.P is not None and result.K is not None
    _, h = linear_obstacle_case()
    reference = psor_reference()
    c_ratio = max(s.overshoot_ratio for s in result.states)
    final = result.states[-1]
    reference_mask = contact_set(reference, h, final.eps, c_ratio)
    distance = float(np.abs(result.P.values - reference.values).max())
    mismatch = mask_mismatch(result.K, reference_mask)
    return CheckOutcome(
        result.converged and distance <= 5e-3 and mismatch <= 4,
        {"sup_distance": distance, "mask_mismatch": mismatch, "errors": result.errors},
    )


def check_overshoot_rate(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """sup(u_ε - h)/ε stays within a factor 3 and the Hessian within a factor 2."""
    result = bundled_run()
    if result.trend is None:
        return CheckOutcome(False, {"errors": result.errors})
    lo, hi = result.trend.overshoot_ratio_range
    factor = result.trend.hessian_variation_factor
    return CheckOutcome(
        lo > 0 and hi / lo <= 3 and factor <= 2,
        {"overshoot_ratio_range": [lo, hi], "hessian_variation_factor": factor},
    )


def check_contact_equation(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """
    Off the final contact set σ_m(θ + i∂∂̄u_ε) drops by a factor 4 across the
    schedule, and the on-contact residual decreases rung by rung.
    """
    result = bundled_run()
    resid = result.final_K_residuals
    if len(resid) < 2:
        return CheckOutcome(False, {"errors": result.errors})
    off = [r.offK_L1 for r in resid]
    on = [s.residual_onK for s in result.states]
    off_ok = off[-1] <= 0.25 * off[0]
    on_ok = all(b <= a for a, b in zip(on, on[1:]))
    return CheckOutcome(off_ok and on_ok, {"offK_L1": off, "onK_L1": on})


def check_offset_equivariance(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """P(h + c) = P(h) + c."""
    theta, h = linear_obstacle_case()
    base = bundled_run()
    assert base.P is not None
    worst = 0.0
    for c in rng.uniform(-1.0, 1.0, samples):
        moved = compute_envelope(theta, h + float(c), m=1)
        assert moved.P is not None
        worst = max(worst, float(np.abs(moved.P.values - base.P.values - c).max()))
    return CheckOutcome(worst <= _TOL, {"max_error": worst})


def check_monotonicity(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """Raising the obstacle raises the penalized solution, on the first rung."""
    theta, h = linear_obstacle_case()
    schedule = (1e-1,)
    low = compute_envelope(theta, h, m=1, schedule=schedule)
    assert low.P is not None
    worst = 0.0
    for _ in range(samples):
        bump = trig_field(
            h.grid,
            [{"wavevector": [int(rng.integers(1, 4)), 0], "amplitude": 0.05}],
            constant=0.05 + float(rng.uniform(0.0, 0.1)),
        )
        high = compute_envelope(theta, h + bump, m=1, schedule=schedule)
        assert high.P is not None
        worst = max(worst, float((low.P.values - high.P.values).max()))
    return CheckOutcome(worst <= _TOL, {"max_violation": worst})


tests: list[PropertySpec] = [
    {"name": "psor-agreement", "check": check_psor_agreement, "samples": 1, "seed": 41},
    {"name": "overshoot-rate", "check": check_overshoot_rate, "samples": 1, "seed": 42},
    {"name": "contact-equation", "check": check_contact_equation, "samples": 1, "seed": 43},
    {"name": "offset-equivariance", "check": check_offset_equivariance, "samples": 2, "seed": 44},
    {"name": "monotonicity", "check": check_monotonicity, "samples": 3, "seed": 45},
]
