"""
The (θ, m)-subharmonic envelope P(h) = sup{v <= h : θ + i∂∂̄v m-positive}.

The envelope is the limit as ε → 0 of the solutions of the penalized equation
log σ_m(θ + i∂∂̄u_ε) = (u_ε - h)/ε. The schedule runs from large to small ε
with warm starts; every rung records its contact set, the overshoot
sup(u_ε - h) and the residuals of the contact-set equation.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .constants import BARRIER_DELTA, CONTACT_TOL_FACTOR, EPS_ENVELOPE_SCHEDULE, MONITOR_A
from .diagnostics import EpsilonTrend, EstimateReport, epsilon_trend, estimate_monitor
from .eigen_ops import EigenOperator, elementary_symmetric, log_hessian, require_cone
from .errors import DivergenceError, DomainError, NonConvergenceError
from .solver import SolveReport, SolverConfig, solve_with_penalty
from .torus import HermitianFormField, ScalarField, eigenvalues_chi, norms, spectral_ddbar

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnvelopeConfig:
    schedule: tuple[float, ...] = EPS_ENVELOPE_SCHEDULE
    contact_tol_factor: float = CONTACT_TOL_FACTOR
    barrier: bool = False
    barrier_delta: float = BARRIER_DELTA
    monitor_A: float = MONITOR_A

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(float(e) for e in self.schedule))
        check_schedule(self.schedule)
        if self.contact_tol_factor <= 0:
            raise DomainError(f"contact_tol_factor must be positive, got {self.contact_tol_factor}")
        if not 0 < self.barrier_delta < 1:
            raise DomainError(f"barrier_delta must be in (0, 1), got {self.barrier_delta}")


def check_schedule(schedule: Sequence[float]) -> None:
    if not schedule:
        raise DomainError("the ε schedule is empty")
    if any(e <= 0 for e in schedule):
        raise DomainError(f"ε values must be positive: {list(schedule)}")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError(f"the ε schedule must be strictly decreasing: {list(schedule)}")


@dataclass
class PenalizationState:
    """One rung of the penalization: u_ε and what was measured on it."""

    eps: float
    m: int
    u: ScalarField
    contact_mask: np.ndarray
    contact_tol: float
    residual_offK: float
    residual_onK: float
    sup_overshoot: float
    report: SolveReport
    estimate: EstimateReport | None = None

    @property
    def overshoot_ratio(self) -> float:
        """sup(u_ε - h)⁺ / ε, the measured overshoot constant."""
        return self.sup_overshoot / self.eps

    @property
    def contact_fraction(self) -> float:
        return float(self.contact_mask.mean())

    def to_dict(self) -> dict[str, Any]:
        return {
            "eps": self.eps,
            "sup_overshoot": self.sup_overshoot,
            "overshoot_ratio": self.overshoot_ratio,
            "contact_tol": self.contact_tol,
            "contact_fraction": self.contact_fraction,
            "residual_offK": self.residual_offK,
            "residual_onK": self.residual_onK,
            "iterations": self.report.iterations,
            "residual": self.report.residual,
            "norms": norms(self.u).to_dict(),
            "estimate": self.estimate.to_dict() if self.estimate else None,
        }


class EnvelopeResidual(NamedTuple):
    offK_L1: float
    """∫ σ_m(θ + i∂∂̄u_ε) off the contact set"""
    onK_L1: float
    """∫ |σ_m(θ + i∂∂̄u_ε) - σ_m(θ + i∂∂̄h)| on the contact set"""


def contact_set(
    u_eps: ScalarField,
    h: ScalarField,
    eps: float,
    c_ratio: float = 1.0,
    factor: float = CONTACT_TOL_FACTOR,
) -> np.ndarray:
    """The numerical contact set {h - u_ε <= factor·c_ratio·ε}."""
    u_eps.grid.require_same(h.grid)
    tol = contact_tolerance(h, eps, c_ratio, factor)
    return (h.values - u_eps.values) <= tol


def contact_tolerance(h: ScalarField, eps: float, c_ratio: float, factor: float) -> float:
    # a rounding-level floor keeps exact contact inside the set when c_ratio = 0
    return factor * c_ratio * eps + 1e-12 * (1.0 + h.sup_norm())


def _sigma_field(theta: HermitianFormField, u: ScalarField, m: int) -> np.ndarray:
    lam = eigenvalues_chi(theta + spectral_ddbar(u))
    return elementary_symmetric(lam, m)[..., m]


def _residuals(
    theta: HermitianFormField, u: ScalarField, h: ScalarField, mask: np.ndarray, m: int
) -> EnvelopeResidual:
    sig_u = _sigma_field(theta, u, m)
    sig_h = _sigma_field(theta, h, m)
    # uniform grid measure on the unit-volume torus
    off = float(np.where(mask, 0.0, np.abs(sig_u)).mean())
    on = float(np.where(mask, np.abs(sig_u - sig_h), 0.0).mean())
    return EnvelopeResidual(off, on)


def envelope_residual(
    state: PenalizationState, theta: HermitianFormField, h: ScalarField
) -> EnvelopeResidual:
    """
    How well u_ε satisfies the contact-set equation σ_m(θ + i∂∂̄P) = χ_K σ_m(θ_h).
    """
    return _residuals(theta, state.u, h, state.contact_mask, state.m)


def solve_penalized(
    op: EigenOperator,
    theta: HermitianFormField,
    h: ScalarField,
    eps: float,
    cfg: SolverConfig | None = None,
    warm: ScalarField | None = None,
    c_ratio: float | None = None,
    env: EnvelopeConfig | None = None,
) -> PenalizationState:
    """
    Solves log σ_m(θ + i∂∂̄u) = (u - h)/ε for one ε.

    The contact tolerance uses ``c_ratio`` when given and the rung's own
    overshoot ratio otherwise.
    """
    env = env or EnvelopeConfig()
    op = log_hessian(op.n, op.order)
    m = op.order
    u, report = solve_with_penalty(op, theta, h, eps, cfg, warm)
    overshoot = max(0.0, float((u.values - h.values).max()))
    ratio = overshoot / eps if c_ratio is None else c_ratio
    tol = contact_tolerance(h, eps, ratio, env.contact_tol_factor)
    mask = (h.values - u.values) <= tol
    resid = _residuals(theta, u, h, mask, m)
    estimate = estimate_monitor(u, theta, op, A=env.monitor_A, h=h)
    state = PenalizationState(
        eps=eps,
        m=m,
        u=u,
        contact_mask=mask,
        contact_tol=tol,
        residual_offK=resid.offK_L1,
        residual_onK=resid.onK_L1,
        sup_overshoot=overshoot,
        report=report,
        estimate=estimate,
    )
    logger.info(
        f"penalized rung ε={eps:g}: overshoot/ε = {state.overshoot_ratio:.4g},"
        f" contact fraction {state.contact_fraction:.3f},"
        f" offK {resid.offK_L1:.3e}, onK {resid.onK_L1:.3e}"
    )
    return state


@dataclass
class EnvelopeResult:
    P: ScalarField | None
    K: np.ndarray | None
    states: list[PenalizationState] = field(default_factory=list)
    errors: list[dict[str, Any]] = field(default_factory=list)
    rung_distances: list[float] = field(default_factory=list)
    distances_decreasing: bool = True
    trend: EpsilonTrend | None = None
    barrier: dict[str, Any] | None = None
    final_K_residuals: list[EnvelopeResidual] = field(default_factory=list)
    """every rung measured against the contact set of the last rung"""

    @property
    def converged(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict[str, Any]:
        return {
            "converged": self.converged,
            "eps": [s.eps for s in self.states],
            "rungs": [s.to_dict() for s in self.states],
            "errors": self.errors,
            "rung_distances": self.rung_distances,
            "distances_decreasing": self.distances_decreasing,
            "contact_fraction": float(self.K.mean()) if self.K is not None else None,
            "trend": self.trend.to_dict() if self.trend else None,
            "barrier": self.barrier,
            "final_K_residuals": [r._asdict() for r in self.final_K_residuals],
        }


def compute_envelope(
    theta: HermitianFormField,
    h: ScalarField,
    m: int,
    schedule: Sequence[float] | None = None,
    cfg: SolverConfig | None = None,
    env: EnvelopeConfig | None = None,
) -> EnvelopeResult:
    """
    Runs the penalization along ``schedule`` (default: ``env.schedule``).

    P is u_ε at the smallest ε reached. A rung that fails to converge ends
    the schedule; the rungs before it are returned with the error recorded.
    """
    env = env or EnvelopeConfig()
    schedule = tuple(env.schedule if schedule is None else schedule)
    check_schedule(schedule)
    theta.grid.require_same(h.grid)
    op = log_hessian(theta.grid.n, m)
    require_cone(op, eigenvalues_chi(theta))

    result = EnvelopeResult(P=None, K=None)
    warm: ScalarField | None = None
    c_ratio = 0.0
    for eps in schedule:
        try:
            state = solve_penalized(op, theta, h, eps, cfg, warm, env=env)
        except (DivergenceError, NonConvergenceError) as e:
            logger.warning(f"penalized rung ε={eps:g} failed: {e}")
            entry: dict[str, Any] = {"eps": eps, "error": type(e).__name__, "message": str(e)}
            if isinstance(e, DivergenceError) and e.witness is not None:
                entry["witness"] = list(e.witness)
            result.errors.append(entry)
            break

        # the contact band uses the largest overshoot ratio seen so far
        c_ratio = max(c_ratio, state.overshoot_ratio)
        if c_ratio != state.overshoot_ratio:
            state.contact_tol = contact_tolerance(h, eps, c_ratio, env.contact_tol_factor)
            state.contact_mask = (h.values - state.u.values) <= state.contact_tol
            resid = _residuals(theta, state.u, h, state.contact_mask, m)
            state.residual_offK, state.residual_onK = resid
        if warm is not None:
            result.rung_distances.append(float(np.abs(state.u.values - warm.values).max()))
        result.states.append(state)
        warm = state.u

    d = result.rung_distances
    result.distances_decreasing = all(b < a for a, b in zip(d, d[1:]))
    if not result.distances_decreasing:
        logger.warning(f"distances between rungs are not decreasing: {d}")
    if result.states:
        result.P = result.states[-1].u
        result.K = result.states[-1].contact_mask
        result.final_K_residuals = [
            _residuals(theta, s.u, h, result.K, m) for s in result.states
        ]
    if len(result.states) >= 3:
        result.trend = epsilon_trend(result.states)
    return result


def barrier_check(
    theta: HermitianFormField,
    h: ScalarField,
    m: int,
    result: EnvelopeResult,
    cfg: SolverConfig | None = None,
    env: EnvelopeConfig | None = None,
) -> dict[str, Any]:
    """
    Checks the penalization sandwich on a finished run.

    Lower barrier: P_{(1-δ)θ}(h) - δ <= u_ε, with the (1-δ)θ envelope computed
    separately on the same schedule. Upper barrier: the smallest C with
    u_ε - C·ε <= P for every earlier rung, measured against the final P.
    """
    env = env or EnvelopeConfig()
    if result.P is None:
        raise DomainError("barrier check needs at least one converged rung")
    delta = env.barrier_delta
    schedule = [s.eps for s in result.states]
    scaled = compute_envelope(theta * (1.0 - delta), h, m, schedule, cfg, env)
    if scaled.P is None:
        raise DomainError(f"the (1 - δ)θ envelope failed: {scaled.errors}")

    lower_gap = max(0.0, float((scaled.P.values - delta - result.P.values).max()))
    lower_tol = scaled.states[-1].sup_overshoot + 1e-12
    upper_c = max(
        (
            max(0.0, float((s.u.values - result.P.values).max())) / s.eps
            for s in result.states[:-1]
        ),
        default=0.0,
    )
    check = {
        "delta": delta,
        "lower_gap": lower_gap,
        "lower_ok": lower_gap <= lower_tol,
        "upper_constant": upper_c,
        "upper_reference_eps": result.states[-1].eps,
    }
    logger.info(f"barrier check: lower gap {lower_gap:.3e}, upper constant {upper_c:.4g}")
    return check


def is_admissible(theta: HermitianFormField, h: ScalarField, m: int) -> bool:
    """Whether θ + i∂∂̄h is strictly m-positive everywhere (then P(h) = h)."""
    lam = eigenvalues_chi(theta + spectral_ddbar(h))
    sig = elementary_symmetric(lam, m)[..., 1:]
    return bool((sig > 0).all())


def mask_mismatch(a: np.ndarray, b: np.ndarray) -> int:
    """Largest number of differing cells along x¹, over all other grid lines."""
    return int((np.asarray(a) != np.asarray(b)).sum(axis=0).max())
