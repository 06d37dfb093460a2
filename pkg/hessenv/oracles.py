"""
Independent reference computations used to validate the solvers.

Nothing here is on the solver path: subset enumeration for σ_m, central
differences, an exact spectral solve of the linear m = 1 equation, and a
projected SOR solver for the m = 1 obstacle problem.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.fft

from .constants import BRUTEFORCE_MAX_N, FD_STEP, PSOR_MAX_SWEEPS, PSOR_OMEGA, PSOR_TOL
from .cones import in_cone
from .eigen_ops import EigenOperator, f_eval, f_grad
from .errors import DomainError, NonConvergenceError
from .torus import (
    HermitianFormField,
    PeriodicGrid,
    ScalarField,
    solve_complex_laplacian,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleConfig:
    psor_omega: float = PSOR_OMEGA
    psor_tol: float = PSOR_TOL
    psor_max_sweeps: int = PSOR_MAX_SWEEPS
    fd_step: float = FD_STEP

    def __post_init__(self):
        if not 0 < self.psor_omega < 2:
            raise DomainError(f"psor_omega must be in (0, 2), got {self.psor_omega}")
        if self.psor_tol <= 0 or self.fd_step <= 0:
            raise DomainError("oracle tolerances must be positive")
        if self.psor_max_sweeps < 1:
            raise DomainError("psor_max_sweeps must be positive")


def sigma_bruteforce(lam, m: int) -> float:
    """σ_m by summing products over all m-subsets (n <= 20)."""
    lam = [float(x) for x in np.asarray(lam, dtype=float).ravel()]
    n = len(lam)
    if n > BRUTEFORCE_MAX_N:
        raise DomainError(f"refusing 2^{n} subset enumeration (n > {BRUTEFORCE_MAX_N})")
    if not 0 <= m <= n:
        raise DomainError(f"m must be in [0, {n}], got {m}")
    return float(sum(math.prod(c) for c in itertools.combinations(lam, m)))


def fd_gradient(op: EigenOperator, lam, step: float = FD_STEP) -> np.ndarray:
    """Central differences of f with a step relative to each |λ_i|."""
    lam = np.asarray(lam, dtype=float)
    grad = np.empty_like(lam)
    for i in range(lam.shape[0]):
        h = step * (1.0 + abs(lam[i]))
        e = np.zeros_like(lam)
        e[i] = h
        grad[i] = (f_eval(op, lam + e) - f_eval(op, lam - e)) / (2 * h)
    return grad


def fd_check(op: EigenOperator, lam, cfg: OracleConfig | None = None) -> float:
    """Max relative error between f_grad and central differences."""
    cfg = cfg or OracleConfig()
    lam = np.asarray(lam, dtype=float)
    margin = in_cone(op.cone, lam).margin
    if margin <= 10 * cfg.fd_step * (1.0 + np.abs(lam).max()):
        raise DomainError(f"cone margin {margin:.3e} too small for fd_step {cfg.fd_step}")
    exact = f_grad(op, lam)
    approx = fd_gradient(op, lam, cfg.fd_step)
    return float(np.abs(exact - approx).max() / np.abs(exact).max())


def f_inf_numeric(
    op: EigenOperator, mu, i: int, ts: tuple[float, ...] = (1e2, 1e4, 1e6)
) -> float:
    """
    Limit of f(μ + t e_i) by extrapolating the last two samples along t,
    assuming f(μ + t e_i) ≈ f_∞ - a/t. Returns +inf when the samples grow.
    """
    mu = np.asarray(mu, dtype=float)
    e = np.zeros_like(mu)
    e[i] = 1.0
    vals = [f_eval(op, mu + t * e) for t in ts]
    if vals[-1] - vals[-2] > 1.0:
        return math.inf
    t1, t2 = ts[-2], ts[-1]
    return float((t2 * vals[-1] - t1 * vals[-2]) / (t2 - t1))


def fd_second_derivative(u: ScalarField, a: int, b: int) -> np.ndarray:
    """Fourth-order centered differences for ∂_a∂_b u on the periodic grid."""
    h = u.grid.spacing
    v = u.values

    def d1(x: np.ndarray, axis: int) -> np.ndarray:
        return (
            -np.roll(x, -2, axis) + 8 * np.roll(x, -1, axis)
            - 8 * np.roll(x, 1, axis) + np.roll(x, 2, axis)
        ) / (12 * h)

    if a == b:
        return (
            -np.roll(v, -2, a) + 16 * np.roll(v, -1, a) - 30 * v
            + 16 * np.roll(v, 1, a) - np.roll(v, 2, a)
        ) / (12 * h**2)
    return d1(d1(v, a), b)


def fd_hessian(u: ScalarField) -> np.ndarray:
    dim = u.grid.dim
    out = np.empty(u.grid.shape + (dim, dim))
    for a in range(dim):
        for b in range(a, dim):
            out[..., a, b] = out[..., b, a] = fd_second_derivative(u, a, b)
    return out


def charpoly_eigenvalues(matrix) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix as real roots of its characteristic polynomial."""
    coeffs = np.poly(np.asarray(matrix, dtype=complex))
    roots = np.roots(coeffs)
    return np.sort(roots.real)[::-1]


def spectral_upsample(u: ScalarField, factor: int) -> ScalarField:
    """Trigonometric interpolation of a band-limited field onto a finer grid."""
    grid = u.grid
    fine = PeriodicGrid(grid.n, grid.N * factor)
    pad = (fine.N - grid.N) // 2
    u_hat = scipy.fft.fftshift(scipy.fft.fftn(u.values))
    padded = np.pad(u_hat, [(pad, pad)] * grid.dim)
    values = scipy.fft.ifftn(scipy.fft.ifftshift(padded)).real * factor**grid.dim
    return ScalarField(fine, values)


class LinearSolution(NamedTuple):
    u: ScalarField
    """mean-zero solution"""
    b: float
    """compatibility constant"""


def linear_solve_sigma1(
    theta: HermitianFormField, h: ScalarField, log_form: bool = False
) -> LinearSolution:
    """
    Exact spectral solve of tr θ + Δ_C u = h + b, with Δ_C = Σ_j ∂_j∂̄_j.

    With ``log_form`` the equation is log(tr θ + Δ_C u) = h + b instead; it is
    still linear in u once b is fixed by integrating e^{h+b} = tr θ + Δ_C u.
    """
    theta.grid.require_same(h.grid)
    trace = np.trace(theta.values, axis1=-2, axis2=-1).real
    if log_form:
        b = math.log(trace.mean() / np.exp(h.values).mean())
        rhs = np.exp(h.values + b) - trace
    else:
        b = float((trace - h.values).mean())
        rhs = h.values + b - trace
    u = solve_complex_laplacian(rhs, h.grid)
    return LinearSolution(ScalarField(h.grid, u - u.mean()), b)


def _fd_complex_laplacian(values: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(values)
    for axis in range(values.ndim):
        out += np.roll(values, -1, axis) - 2 * values + np.roll(values, 1, axis)
    return 0.25 * out / h**2


def complementarity_residual(
    theta_trace: np.ndarray, u: np.ndarray, h: np.ndarray, spacing: float
) -> float:
    """max |min(tr θ + Δ_C u, h - u)| with the finite-difference Δ_C."""
    return float(np.abs(np.minimum(theta_trace + _fd_complex_laplacian(u, spacing), h - u)).max())


def psor_obstacle(
    theta: HermitianFormField, h: ScalarField, cfg: OracleConfig | None = None
) -> ScalarField:
    """
    The m = 1 envelope sup{v <= h : tr θ + Δ_C v >= 0} by projected SOR.

    Solves the complementarity problem min(tr θ + Δ_C u, h - u) = 0 with the
    second-order finite-difference Δ_C (one 3-point stencil per real axis),
    sweeping points in fixed lexicographic order.
    """
    cfg = cfg or OracleConfig()
    grid = h.grid
    theta.grid.require_same(grid)
    trace = np.trace(theta.values, axis1=-2, axis2=-1).real

    # w = -u turns the envelope into a lower-obstacle problem w >= -h
    # for the positive operator -Δ_C
    size = grid.size
    index = np.arange(size).reshape(grid.shape)
    neighbours = np.stack(
        [np.roll(index, s, axis).ravel() for axis in range(grid.dim) for s in (1, -1)],
        axis=-1,
    ).tolist()
    coef = 0.25 / grid.spacing**2
    diag = 2 * grid.dim * coef
    psi = (-h.values).ravel().tolist()
    rhs = (-trace).ravel().tolist()
    w = list(psi)
    omega = cfg.psor_omega

    for sweep in range(1, cfg.psor_max_sweeps + 1):
        for p in range(size):
            s = 0.0
            for q in neighbours[p]:
                s += w[q]
            w_gs = (rhs[p] + coef * s) / diag
            w[p] = max(psi[p], w[p] + omega * (w_gs - w[p]))
        u = -np.asarray(w).reshape(grid.shape)
        resid = complementarity_residual(trace, u, h.values, grid.spacing)
        if resid <= cfg.psor_tol:
            logger.debug(f"PSOR converged in {sweep} sweeps (residual {resid:.2e})")
            return ScalarField(grid, u)
    raise NonConvergenceError(
        f"PSOR did not reach {cfg.psor_tol:g} in {cfg.psor_max_sweeps} sweeps (residual {resid:.2e})"
    )
