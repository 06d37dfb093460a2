"""
Monitors for the quantities bounded by the second-order estimate.

The monitor evaluates, on a computed solution, the test function
Q = log λ₁(∇²u) + ξ(|ρ|²) + η(|∂u|²) + e^{-Au} with ρ = ∇²u + L·g, together
with the linearized coefficients F^{iī} and their ordering. Nothing here
feeds back into a solve.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from .constants import MONITOR_A
from .eigen_ops import EigenOperator, f_grad, require_cone
from .errors import ConeViolation, InsufficientData
from .torus import (
    FieldNorms,
    HermitianFormField,
    ScalarField,
    eigenvalues_chi,
    gradient,
    laplacian,
    norms,
    real_hessian,
    spectral_ddbar,
)

if TYPE_CHECKING:
    from .envelope import PenalizationState

logger = logging.getLogger(__name__)

DEGENERATE = "degenerate: λ₁ ≤ 0"
# sup|∇²u| below this is spectral round-off, not curvature
HESSIAN_FLOOR = 1e-9


def xi(s, L: float, width: float = 5.0):
    """ξ(s) = -⅓ log(width·L² - s); +inf once s reaches width·L²."""
    arg = width * L**2 - np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(arg > 0, -np.log(np.where(arg > 0, arg, 1.0)) / 3.0, math.inf)


def xi_prime(s, L: float, width: float = 5.0):
    return 1.0 / (3.0 * (width * L**2 - np.asarray(s, dtype=float)))


def xi_second(s, L: float, width: float = 5.0):
    return 1.0 / (3.0 * (width * L**2 - np.asarray(s, dtype=float)) ** 2)


def eta(s, grad_sup_sq: float):
    """η(s) = -⅓ log(1 + sup|∂u|² - s)."""
    return -np.log(1.0 + grad_sup_sq - np.asarray(s, dtype=float)) / 3.0


def eta_prime(s, grad_sup_sq: float):
    return 1.0 / (3.0 * (1.0 + grad_sup_sq - np.asarray(s, dtype=float)))


def eta_second(s, grad_sup_sq: float):
    return 1.0 / (3.0 * (1.0 + grad_sup_sq - np.asarray(s, dtype=float)) ** 2)


@dataclass
class EstimateReport:
    """
    Attributes:
        norms: the field norms of u.
        lambda1_max: sup λ₁(∇²u).
        L: sup|∇²u| + 1.
        rho_norm_max: sup |ρ|² (Frobenius), ρ = ∇²u + L·g.
        rho_positive: ρ positive-definite at every point.
        rho_bounded: the operator norm of ρ is at most 2L everywhere.
        Q_max: max of Q over the grid, None when λ₁ ≤ 0 everywhere.
        status: "ok", or the degenerate sentinel.
        F_diag_range: (min_x min_i F^{iī}, max_x Σ_i F^{iī}); None on a cone violation.
        ordering_ok: sorted F^{iī} increase as the sorted eigenvalues decrease.
        penalized: the variant with the widened ξ and η and e^{-A(u - inf u)}.
    """

    norms: FieldNorms
    lambda1_max: float
    L: float
    rho_norm_max: float
    rho_positive: bool
    rho_bounded: bool
    A: float
    status: str = "ok"
    Q_max: float | None = None
    argmax: tuple[int, ...] | None = None
    xi_at_max: float | None = None
    eta_at_max: float | None = None
    xi_prime_at_max: float | None = None
    xi_prime_in_bounds: bool | None = None
    F_diag_range: tuple[float, float] | None = None
    ordering_ok: bool | None = None
    hessian_bound_ok: bool = True
    cone_violation: dict[str, Any] | None = None
    penalized: dict[str, Any] = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.status != "ok"

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["norms"] = self.norms.to_dict()
        return d


def _q_field(
    lam1: np.ndarray,
    rho_sq: np.ndarray,
    grad_sq: np.ndarray,
    exp_term: np.ndarray,
    L: float,
    grad_sup_sq: float,
    width: float,
) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        log_l1 = np.where(lam1 > 0, np.log(np.where(lam1 > 0, lam1, 1.0)), -math.inf)
    return log_l1 + xi(rho_sq, L, width) + eta(grad_sq, grad_sup_sq) + exp_term


def estimate_monitor(
    u: ScalarField,
    theta: HermitianFormField,
    op: EigenOperator,
    A: float = MONITOR_A,
    h: ScalarField | None = None,
) -> EstimateReport:
    """
    Evaluates the estimate quantities for ``u`` solving an equation of ``op``
    with background form ``theta``. Pass the obstacle ``h`` to widen η in the
    penalized variant by 4·sup|∂h|².
    """
    theta.grid.require_same(u.grid)
    grid = u.grid
    n = grid.n
    field_norms = norms(u)

    hess = real_hessian(u)
    hess_eigs = np.linalg.eigvalsh(hess)
    lam1 = hess_eigs[..., -1]
    L = field_norms.sup_hessian + 1.0

    rho = hess + L * np.eye(grid.dim)
    rho_eigs = hess_eigs + L
    rho_sq = (rho**2).sum(axis=(-2, -1))
    grad_sq = (gradient(u) ** 2).sum(axis=-1)
    grad_sup_sq = float(grad_sq.max())

    report = EstimateReport(
        norms=field_norms,
        lambda1_max=float(lam1.max()),
        L=L,
        rho_norm_max=float(rho_sq.max()),
        rho_positive=bool((rho_eigs[..., 0] > 0).all()),
        rho_bounded=bool((np.abs(rho_eigs).max(axis=-1) <= 2 * L * (1 + 1e-12)).all()),
        A=A,
    )

    # |∇²u| <= 2n·λ₁ + C with C from the lower bound of the trace
    trace_floor = max(0.0, -float(laplacian(u).min()))
    report.hessian_bound_ok = bool(
        report.lambda1_max <= field_norms.sup_hessian * (1 + 1e-12) + 1e-12
        and field_norms.sup_hessian
        <= 2 * n * max(report.lambda1_max, 0.0) + trace_floor + 1e-9 * L
    )

    if report.lambda1_max <= 0:
        report.status = DEGENERATE
        logger.debug(f"estimate monitor: {DEGENERATE}")
    else:
        q = _q_field(lam1, rho_sq, grad_sq, np.exp(-A * u.values), L, grad_sup_sq, 5.0)
        idx = np.unravel_index(np.argmax(q), q.shape)
        s = float(rho_sq[idx])
        report.Q_max = float(q[idx])
        report.argmax = tuple(int(k) for k in idx)
        report.xi_at_max = float(xi(s, L))
        report.eta_at_max = float(eta(grad_sq[idx], grad_sup_sq))
        report.xi_prime_at_max = float(xi_prime(s, L))
        report.xi_prime_in_bounds = bool(
            1 / (18 * L**2) <= report.xi_prime_at_max <= 1 / (3 * L**2)
        )

        # the variant used along the penalization
        h_grad_sq = 0.0 if h is None else float((gradient(h) ** 2).sum(axis=-1).max())
        widened = grad_sup_sq + 4 * h_grad_sq
        shifted = np.exp(-A * (u.values - u.inf()))
        qp = _q_field(lam1, rho_sq, grad_sq, shifted, L, widened, 100.0 * n**2)
        pidx = np.unravel_index(np.argmax(qp), qp.shape)
        report.penalized = {
            "Q_max": float(qp[pidx]),
            "argmax": [int(k) for k in pidx],
            "xi_at_max": float(xi(rho_sq[pidx], L, 100.0 * n**2)),
            "eta_at_max": float(eta(grad_sq[pidx], widened)),
            "B": u.inf(),
        }

    chi = theta + spectral_ddbar(u)
    lam = eigenvalues_chi(chi)
    try:
        require_cone(op, lam)
    except ConeViolation as e:
        report.cone_violation = e.to_dict()
        logger.info(f"estimate monitor: {e}")
        return report
    fi = f_grad(op, lam, check=False)
    report.F_diag_range = (float(fi.min()), float(fi.sum(axis=-1).max()))
    scale = 1e-10 * (1.0 + np.abs(fi).max())
    report.ordering_ok = bool((np.diff(fi, axis=-1) >= -scale).all())
    return report


@dataclass
class EpsilonTrend:
    eps: list[float]
    overshoot_ratio_range: tuple[float, float]
    hessian_variation_factor: float
    residual_slopes: dict[str, float | None]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _loglog_slope(eps: np.ndarray, values: np.ndarray) -> float | None:
    keep = values > 0
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(eps[keep]), np.log(values[keep]), 1)
    return float(slope)


def _variation_factor(values: Sequence[float]) -> float:
    """max/min, with values at or below HESSIAN_FLOOR counted as zero curvature."""
    hi, lo = max(values), min(values)
    if hi <= HESSIAN_FLOOR:
        return 1.0
    if lo <= HESSIAN_FLOOR:
        return math.inf
    return hi / lo


def epsilon_trend(states: Sequence["PenalizationState"]) -> EpsilonTrend:
    """
    Fits the ε-dependence across penalization rungs: the range of
    sup(u_ε - h)/ε, the spread of sup|∇²u_ε| and log-log slopes of the
    overshoot and the contact-set residuals.
    """
    if len(states) < 3:
        raise InsufficientData(f"epsilon_trend needs at least 3 rungs, got {len(states)}")
    eps = np.array([s.eps for s in states])
    ratios = [s.overshoot_ratio for s in states]
    hess = [
        s.estimate.norms.sup_hessian if s.estimate is not None else norms(s.u).sup_hessian
        for s in states
    ]
    slopes = {
        name: _loglog_slope(eps, np.array([getattr(s, name) for s in states]))
        for name in ("sup_overshoot", "residual_offK", "residual_onK")
    }
    factor = _variation_factor(hess)
    trend = EpsilonTrend(
        eps=[float(e) for e in eps],
        overshoot_ratio_range=(min(ratios), max(ratios)),
        hessian_variation_factor=factor,
        residual_slopes=slopes,
    )
    logger.info(
        f"ε-trend: overshoot ratio in [{min(ratios):.4g}, {max(ratios):.4g}],"
        f" Hessian variation factor {factor:.4g}"
    )
    return trend
