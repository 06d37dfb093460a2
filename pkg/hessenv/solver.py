"""
Damped Newton-Krylov solver for f(λ(θ + i∂∂̄u)) = h + b on the flat torus.

Each Newton step solves the linearization with preconditioned GMRES. The
unknown constant b is handled by bordering the system with a mean-zero
constraint on δu. The penalized equation log σ_m = (u - h)/ε has no constant;
it is iterated as σ_m = e^{(u - h)/ε}, whose linearization gains the
zeroth-order term -(1/ε)e^{(u - h)/ε}δu.
"""

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Literal

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .cones import in_cone, subsolution_check
from .constants import (
    CONE_MARGIN,
    DAMPING,
    EPS_REG_SCHEDULE,
    KRYLOV_TOL,
    MAX_BACKTRACKS,
    MAX_NEWTON_ITERS,
    RESIDUAL_TOL,
)
from .eigen_ops import (
    EigenOperator,
    f_eval,
    f_grad,
    log_hessian,
    require_cone,
    sigma_m,
    sigma_without,
)
from .errors import ConeViolation, DivergenceError, DomainError, NonConvergenceError
from .torus import (
    HermitianFormField,
    ScalarField,
    complex_laplacian_symbol,
    contract_form,
    ddbar_values,
    eigh_chi,
    fourier_solve,
    norms,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    max_newton_iters: int = MAX_NEWTON_ITERS
    residual_tol: float = RESIDUAL_TOL
    cone_margin: float = CONE_MARGIN
    damping: float = DAMPING
    krylov_tol: float = KRYLOV_TOL
    krylov_maxiter: int = 50
    krylov_restart: int = 50
    max_backtracks: int = MAX_BACKTRACKS
    eps_reg_schedule: tuple[float, ...] = EPS_REG_SCHEDULE

    def __post_init__(self):
        for name in ("residual_tol", "cone_margin", "krylov_tol"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.damping < 1:
            raise DomainError(f"damping must be in (0, 1), got {self.damping}")
        if self.max_newton_iters < 1 or self.max_backtracks < 1:
            raise DomainError("iteration budgets must be positive")
        if any(e <= 0 for e in self.eps_reg_schedule):
            raise DomainError("eps_reg_schedule entries must be positive")
        object.__setattr__(self, "eps_reg_schedule", tuple(float(e) for e in self.eps_reg_schedule))

    def replace(self, **kwargs) -> "SolverConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["eps_reg_schedule"] = list(self.eps_reg_schedule)
        return d


@dataclass
class SolveReport:
    """
    Attributes:
        iterations: accepted Newton steps.
        residual: final residual in the discrete sup-norm.
        constant: b (additive constant) or c (eigenvalue constant).
        constant_name: "b", "c", or "none" for the penalized equation.
        residual_history: sup-norm residual before each step and at the end.
        cone_margin_history: min cone margin of each accepted iterate.
        step_lengths: damping factor of each accepted step.
        krylov_iterations: inner iterations per step.
        wall_time: seconds.
        extra: per-solver fields. Every Newton solve records ``cone_floor``,
            the lowest cone margin an iterate may have (-cone_margin for the
            penalized equation, +cone_margin otherwise). The eigenpair solve
            adds ``c_sequence``, ``c_settled`` and ``rungs``.
    """

    iterations: int = 0
    residual: float = math.inf
    constant: float = 0.0
    constant_name: Literal["b", "c", "none"] = "b"
    converged: bool = False
    residual_history: list[float] = field(default_factory=list)
    cone_margin_history: list[float] = field(default_factory=list)
    step_lengths: list[float] = field(default_factory=list)
    krylov_iterations: list[int] = field(default_factory=list)
    wall_time: float = 0.0
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


class _Equation:
    """f(λ) = rhs + b, with the constant b unknown when ``with_constant``."""

    kind = "nondegenerate"

    def __init__(self, op: EigenOperator, rhs: np.ndarray, with_constant: bool = True):
        self.op = op
        self.rhs = rhs
        self.with_constant = with_constant

    def cone_floor(self, cfg: SolverConfig) -> float:
        return cfg.cone_margin

    def residual(self, lam: np.ndarray, u: np.ndarray, b: float) -> np.ndarray:
        return f_eval(self.op, lam, check=False) - self.rhs - b

    def gradient(self, lam: np.ndarray) -> np.ndarray:
        return f_grad(self.op, lam, check=False)

    def zeroth_order(self, u: np.ndarray) -> np.ndarray | float:
        return 0.0


class _PenalizedEquation(_Equation):
    """
    log σ_m(λ) = (u - h)/ε, evaluated as σ_m(λ) = exp((u - h)/ε).

    Off the contact set σ_m of the solution is exponentially small in 1/ε,
    well below the rounding error of λ, so the logarithmic residual cannot be
    resolved there while the exponentiated one can. Iterates may touch the
    closed cone up to ``cone_margin``.
    """

    kind = "penalized"

    def __init__(self, op: EigenOperator, h: np.ndarray, eps: float):
        super().__init__(op, h, with_constant=False)
        self.eps = eps

    def cone_floor(self, cfg: SolverConfig) -> float:
        return -cfg.cone_margin

    def _target(self, u: np.ndarray) -> np.ndarray:
        return np.exp(np.minimum((u - self.rhs) / self.eps, 700.0))

    def residual(self, lam: np.ndarray, u: np.ndarray, b: float) -> np.ndarray:
        return sigma_m(lam, self.op.order) - self._target(u)

    def gradient(self, lam: np.ndarray) -> np.ndarray:
        return sigma_without(lam, self.op.order - 1)

    def zeroth_order(self, u: np.ndarray) -> np.ndarray | float:
        return self._target(u) / self.eps


class _State:
    """One evaluated iterate: eigen-decomposition, residual and cone margin."""

    def __init__(self, eq: _Equation, theta: HermitianFormField, u: np.ndarray, b: float, floor: float):
        chi = HermitianFormField(theta.grid, theta.values + ddbar_values(theta.grid, u))
        self.u = u
        self.b = b
        self.lam, self.vecs = eigh_chi(chi)
        member = in_cone(eq.op.cone, self.lam)
        self.margin_field = np.asarray(member.margin)
        self.margin = float(self.margin_field.min())
        self.inequality = member.inequality
        self.admissible = self.margin >= floor
        if self.admissible:
            self.resid = eq.residual(self.lam, u, b)
            self.r_sup = float(np.abs(self.resid).max())
        else:
            self.resid = None
            self.r_sup = math.inf

    @property
    def worst_point(self) -> tuple[int, ...]:
        idx = np.unravel_index(np.argmin(self.margin_field), self.margin_field.shape)
        return tuple(int(k) for k in idx)


def _frame_coefficients(vecs: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """F^{jk̄} = V diag(f_i) V*, the first derivative rotated back to coordinates."""
    return np.einsum("...ji,...i,...ki->...jk", vecs, grad, np.conj(vecs))


def _linear_operator(grid, coeff: np.ndarray, kappa, with_constant: bool):
    """The linearization F^{jk̄}∂_j∂̄_k - κ (bordered by -δb and mean(δu) = r)."""
    size = grid.size
    shape = grid.shape
    dim = size + 1 if with_constant else size

    def matvec(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        du = x[:size].reshape(shape)
        out = contract_form(coeff, ddbar_values(grid, du)) - kappa * du
        if not with_constant:
            return out.ravel()
        return np.concatenate([(out - x[size]).ravel(), [du.mean()]])

    # constant-coefficient spectral inverse of a·Δ_C - mean(κ)
    a = float(np.trace(coeff, axis1=-2, axis2=-1).real.mean() / grid.n)
    symbol = a * complex_laplacian_symbol(grid) - float(np.mean(kappa))

    def precondition(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        r = x[:size].reshape(shape)
        db = -float(r.mean()) if with_constant else 0.0
        du = fourier_solve(r + db, symbol)
        if not with_constant:
            return du.ravel()
        du = du - du.mean() + x[size]
        return np.concatenate([du.ravel(), [db]])

    A = LinearOperator((dim, dim), matvec=matvec, dtype=float)
    M = LinearOperator((dim, dim), matvec=precondition, dtype=float)
    return A, M


def _newton(
    eq: _Equation,
    theta: HermitianFormField,
    cfg: SolverConfig,
    u0: np.ndarray | None = None,
    report: SolveReport | None = None,
) -> tuple[np.ndarray, float, SolveReport]:
    """Damped Newton on ``eq``; returns (u, b, report)."""
    grid = theta.grid
    op = eq.op
    floor = eq.cone_floor(cfg)
    report = report or SolveReport(constant_name="b" if eq.with_constant else "none")
    report.extra["cone_floor"] = floor
    start = time.perf_counter()

    def fail(exc):
        report.residual = state.r_sup
        report.constant = state.b
        report.wall_time += time.perf_counter() - start
        return exc

    u = np.zeros(grid.shape) if u0 is None else np.array(u0, dtype=float)
    state = _State(eq, theta, u, 0.0, floor)
    if not state.admissible:
        raise ConeViolation(
            f"initial iterate is not inside the cone of {op} (margin {state.margin:.3e})",
            inequality=state.inequality,
            margin=state.margin,
            witness=state.worst_point,
        )
    if eq.with_constant:
        # best constant for the initial iterate
        state = _State(eq, theta, u, float(np.mean(state.resid)), floor)

    report.residual_history.append(state.r_sup)
    report.cone_margin_history.append(state.margin)
    logger.debug(f"Newton start: residual {state.r_sup:.3e}, margin {state.margin:.3e}")

    while state.r_sup > cfg.residual_tol:
        if report.iterations >= cfg.max_newton_iters:
            raise fail(
                NonConvergenceError(
                    f"Newton did not converge in {cfg.max_newton_iters} iterations"
                    f" (residual {state.r_sup:.3e})",
                    report=report,
                )
            )

        coeff = _frame_coefficients(state.vecs, eq.gradient(state.lam))
        A, M = _linear_operator(grid, coeff, eq.zeroth_order(state.u), eq.with_constant)
        assert state.resid is not None
        rhs_vec = -state.resid.ravel()
        if eq.with_constant:
            rhs_vec = np.concatenate([rhs_vec, [0.0]])
        inner = [0]

        def count(_):
            inner[0] += 1

        # forcing term shrinks with the residual to keep the quadratic tail
        eta = min(cfg.krylov_tol, state.r_sup)
        x, info = gmres(
            A,
            rhs_vec,
            rtol=eta,
            atol=0.0,
            restart=cfg.krylov_restart,
            maxiter=cfg.krylov_maxiter,
            M=M,
            callback=count,
            callback_type="pr_norm",
        )
        if info > 0:
            logger.debug(f"GMRES stopped short of tolerance {eta:.1e}")
        report.krylov_iterations.append(inner[0])
        du = x[: grid.size].reshape(grid.shape)
        db = float(x[grid.size]) if eq.with_constant else 0.0

        step = 1.0
        trial = state
        for _ in range(cfg.max_backtracks):
            trial = _State(eq, theta, state.u + step * du, state.b + step * db, floor)
            if trial.admissible and trial.r_sup < state.r_sup:
                break
            step *= cfg.damping
        else:
            if not trial.admissible:
                raise fail(
                    DivergenceError(
                        f"iterate leaves the cone of {op} at {trial.worst_point}"
                        f" ({trial.inequality}) under every damped step",
                        witness=trial.worst_point,
                        report=report,
                    )
                )
            raise fail(
                NonConvergenceError(
                    f"damping could not decrease the residual below {state.r_sup:.3e}",
                    report=report,
                )
            )

        state = trial
        report.iterations += 1
        report.step_lengths.append(step)
        report.residual_history.append(state.r_sup)
        report.cone_margin_history.append(state.margin)
        logger.debug(
            f"Newton {report.iterations}: residual {state.r_sup:.3e}, step {step:g},"
            f" margin {state.margin:.3e}, krylov {inner[0]}"
        )

    report.converged = True
    report.residual = state.r_sup
    report.constant = state.b
    report.wall_time += time.perf_counter() - start
    return state.u, state.b, report


def solve_nondegenerate(
    op: EigenOperator,
    theta: HermitianFormField,
    h: ScalarField,
    cfg: SolverConfig | None = None,
    u0: ScalarField | None = None,
) -> tuple[ScalarField, SolveReport]:
    """
    Solves f(λ(θ + i∂∂̄u)) = h + b for (u, b). The returned u is normalized to
    sup u = -1; the report carries b.
    """
    cfg = cfg or SolverConfig()
    theta.grid.require_same(h.grid)
    u, b, report = _newton(
        _Equation(op, h.values), theta, cfg, None if u0 is None else u0.values
    )
    solution = ScalarField(h.grid, u).normalized(-1.0)
    logger.info(
        f"Solved {op} in {report.iterations} Newton steps:"
        f" residual {report.residual:.2e}, b = {b:.6g}"
    )
    return solution, report


def solve_with_penalty(
    op: EigenOperator,
    theta: HermitianFormField,
    h: ScalarField,
    eps: float,
    cfg: SolverConfig | None = None,
    warm: ScalarField | None = None,
) -> tuple[ScalarField, SolveReport]:
    """
    Solves log σ_m(λ(θ + i∂∂̄u)) = (u - h)/ε; the zeroth-order term fixes the
    constant. Without a warm start the iterate begins at the constant that
    solves the equation for the mean of h.
    """
    cfg = cfg or SolverConfig()
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if op.name != "hessian_log_sigma_m":
        op = log_hessian(op.n, op.order)
    theta.grid.require_same(h.grid)
    if warm is None:
        lam0 = np.linalg.eigvalsh(theta.values)
        require_cone(op, lam0)
        sig = sigma_m(lam0, op.order)
        u0 = np.full(h.grid.shape, h.mean() + eps * float(np.log(np.mean(sig))))
    else:
        u0 = warm.values
    u, _, report = _newton(_PenalizedEquation(op, h.values, eps), theta, cfg, u0)
    report.extra["eps"] = eps
    return ScalarField(h.grid, u), report


def linearized_apply(
    op: EigenOperator, chi: HermitianFormField, delta_u: ScalarField
) -> ScalarField:
    """F^{jk̄}(χ) ∂_j∂̄_k δu, the derivative of f(λ(χ + i∂∂̄·)) at χ."""
    chi.grid.require_same(delta_u.grid)
    lam, vecs = eigh_chi(chi)
    require_cone(op, lam)
    grad = f_grad(op, lam, check=False)
    coeff = _frame_coefficients(vecs, grad)
    return ScalarField(chi.grid, contract_form(coeff, ddbar_values(chi.grid, delta_u.values)))


def stokes_constant(theta: HermitianFormField, h: ScalarField, m: int, eps: float) -> float:
    """
    c from integrating σ_m(θ + i∂∂̄u) = c·C(n,m)·(h + ε): for constant θ the
    integral of the left side is σ_m(θ)·vol, independent of u.
    """
    n = theta.grid.n
    sig = float(np.mean(sigma_m(np.linalg.eigvalsh(theta.values), m)))
    return sig / (math.comb(n, m) * float(np.mean(h.values + eps)))


def eigenpair_lower_bound(theta: HermitianFormField, h: ScalarField, m: int, eps: float) -> float:
    """c >= min σ_m(θ) / (C(n,m)·max(h + ε)), from the minimum point of u."""
    n = theta.grid.n
    sig = float(np.min(sigma_m(np.linalg.eigvalsh(theta.values), m)))
    return sig / (math.comb(n, m) * float(np.max(h.values + eps)))


def c_sequence_settled(c_sequence: Sequence[float], tol: float = 0.0) -> bool:
    """True when consecutive differences never grow, differences below ``tol`` aside."""
    diffs = [abs(b - a) for a, b in zip(c_sequence, c_sequence[1:])]
    return not any(d2 > max(d1, tol) for d1, d2 in zip(diffs, diffs[1:]))


def solve_eigenpair(
    op: EigenOperator,
    theta: HermitianFormField,
    h: ScalarField,
    cfg: SolverConfig | None = None,
) -> tuple[ScalarField, float, SolveReport]:
    """
    The degenerate Hessian eigenvalue pair: σ_m(θ + i∂∂̄u) = c·C(n,m)·h with
    sup u = -1, as the limit of h + ε over the regularization schedule.
    """
    cfg = cfg or SolverConfig()
    if not op.is_hessian:
        raise DomainError(f"eigenpair needs a Hessian operator, got {op}")
    if np.any(h.values < 0):
        raise DomainError("eigenpair needs h >= 0")
    if h.mean() <= 0:
        raise DomainError("eigenpair needs h with positive integral")
    m, n = op.order, op.n
    log_op = log_hessian(n, m)

    report = SolveReport(constant_name="c")
    start = time.perf_counter()
    c_sequence: list[float] = []
    rungs: list[dict[str, Any]] = []
    u_vals: np.ndarray | None = None
    for eps in cfg.eps_reg_schedule:
        rhs = np.log(math.comb(n, m) * (h.values + eps))
        u_vals, log_c, rung = _newton(_Equation(log_op, rhs), theta, cfg, u_vals)
        c = math.exp(log_c)
        c_sequence.append(c)
        report.iterations += rung.iterations
        report.residual_history.extend(rung.residual_history)
        report.cone_margin_history.extend(rung.cone_margin_history)
        report.krylov_iterations.extend(rung.krylov_iterations)
        rungs.append(
            {
                "eps": eps,
                "c": c,
                "iterations": rung.iterations,
                "residual": rung.residual,
                "c_integral": stokes_constant(theta, h, m, eps),
                "c_lower_bound": eigenpair_lower_bound(theta, h, m, eps),
            }
        )
        logger.info(f"eigenpair rung eps={eps:g}: c = {c:.8g} ({rung.iterations} steps)")
        report.residual = rung.residual

    assert u_vals is not None
    settled = c_sequence_settled(c_sequence, tol=10 * cfg.residual_tol * max(c_sequence))
    if not settled:
        logger.warning(f"c-sequence is not settling: {c_sequence}")
    report.converged = True
    report.constant = c_sequence[-1]
    report.wall_time = time.perf_counter() - start
    report.extra.update({"c_sequence": c_sequence, "c_settled": settled, "rungs": rungs})
    u = ScalarField(h.grid, u_vals).normalized(-1.0)
    return u, c_sequence[-1], report


def solve_degenerate(
    op: EigenOperator,
    theta: HermitianFormField,
    h: ScalarField,
    cfg: SolverConfig | None = None,
) -> tuple[ScalarField, SolveReport]:
    """
    A degenerate right-hand side reached as the limit of regularized ones.

    For operators with sup_∂Γ f = 0 (root and quotient forms) ``h`` is the
    right-hand side itself, h >= 0, and rung ε solves f = h + ε + b. For the
    logarithmic operators ``h`` is a density ρ >= 0 and rung ε solves
    f = log(ρ + ε) + b. At every rung u̲ = 0 is certified as a subsolution.
    """
    cfg = cfg or SolverConfig()
    if np.any(h.values < 0):
        raise DomainError("degenerate data must be non-negative")
    report = SolveReport(constant_name="b")
    start = time.perf_counter()
    zero = h.grid.zeros()
    rungs: list[dict[str, Any]] = []
    u_prev: np.ndarray | None = None
    for eps in cfg.eps_reg_schedule:
        if math.isinf(op.sup_boundary_f):
            rhs = np.log(h.values + eps)
        else:
            rhs = h.values + eps
        h_eps = ScalarField(h.grid, rhs)
        cert = subsolution_check(op, theta, zero, h_eps)
        u_vals, b, rung = _newton(_Equation(op, rhs), theta, cfg, u_prev)
        u = ScalarField(h.grid, u_vals).normalized(-1.0)
        step = None if u_prev is None else float(
            np.abs(u.values - ScalarField(h.grid, u_prev).normalized(-1.0).values).max()
        )
        rungs.append(
            {
                "eps": eps,
                "b": b,
                "iterations": rung.iterations,
                "residual": rung.residual,
                "sigma_0": cert.sigma_0,
                "subsolution_accepted": cert.accepted,
                "sup_hessian": norms(u).sup_hessian,
                "sup_diff_previous": step,
            }
        )
        report.iterations += rung.iterations
        report.residual_history.extend(rung.residual_history)
        report.cone_margin_history.extend(rung.cone_margin_history)
        report.residual = rung.residual
        report.constant = b
        u_prev = u_vals
        logger.info(f"degenerate rung eps={eps:g}: b = {b:.6g}, {rung.iterations} steps")
    assert u_prev is not None
    report.converged = True
    report.wall_time = time.perf_counter() - start
    report.extra["rungs"] = rungs
    return ScalarField(h.grid, u_prev).normalized(-1.0), report
