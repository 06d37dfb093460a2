"""
Symmetric functions of eigenvalues and the operator catalog.

Every function here accepts either a single eigenvalue vector of shape ``(n,)``
or a batch of shape ``(..., n)`` (e.g. one vector per grid point) and returns
results with the batch shape preserved. Indices are 0-based.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Any, Literal, NamedTuple, get_args

import numpy as np

from .constants import TIE_THRESHOLD
from .errors import ConeViolation, DomainError

if TYPE_CHECKING:
    from .cones import ConeSpec

logger = logging.getLogger(__name__)

OperatorName = Literal[
    "monge_ampere",
    "hessian_log_sigma_m",
    "hessian_root_sigma_m",
    "hessian_quotient",
    "n_minus_one_ma",
]
OPERATOR_NAMES: tuple[str, ...] = get_args(OperatorName)


@dataclass(frozen=True)
class EigenOperator:
    """
    A concave, increasing symmetric function f on an open cone.

    Attributes:
        name: which catalog entry.
        n: complex dimension.
        m: Hessian order; forced to ``n`` for monge_ampere and n_minus_one_ma.
        ell: lower order of the quotient (σ_m/σ_ℓ)^{1/(m-ℓ)}, 0 <= ell < m.
        shift: constant multiple of the identity added to the transformed
            vector of n_minus_one_ma (the ω_h term). Ignored otherwise.
    """

    name: OperatorName
    n: int
    m: int | None = None
    ell: int = 0
    shift: float = 0.0

    def __post_init__(self):
        if self.name not in OPERATOR_NAMES:
            raise DomainError(f"Unknown operator {self.name!r}, one of {OPERATOR_NAMES}")
        if self.n < 1:
            raise DomainError(f"n must be positive, got {self.n}")
        if self.name in ("monge_ampere", "n_minus_one_ma"):
            object.__setattr__(self, "m", self.n)
        elif self.m is None:
            raise DomainError(f"{self.name} requires m")
        assert self.m is not None
        if not 1 <= self.m <= self.n:
            raise DomainError(f"m must be in [1, {self.n}], got {self.m}")
        if self.name == "hessian_quotient":
            if not 0 <= self.ell < self.m:
                raise DomainError(f"ell must be in [0, {self.m - 1}], got {self.ell}")
        else:
            object.__setattr__(self, "ell", 0)
        if self.name == "n_minus_one_ma" and self.n < 2:
            raise DomainError("n_minus_one_ma needs n >= 2")

    @property
    def order(self) -> int:
        assert self.m is not None
        return self.m

    @property
    def cone(self) -> "ConeSpec":
        from .cones import operator_cone  # noreorder

        return operator_cone(self)

    @property
    def is_hessian(self) -> bool:
        return self.name in ("hessian_log_sigma_m", "hessian_root_sigma_m")

    @property
    def sup_boundary_f(self) -> float:
        if self.name in ("hessian_root_sigma_m", "hessian_quotient"):
            return 0.0
        return -math.inf

    @property
    def sup_f(self) -> float:
        return math.inf

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def __str__(self) -> str:
        params = f"n={self.n}"
        if self.name not in ("monge_ampere", "n_minus_one_ma"):
            params += f",m={self.m}"
        if self.name == "hessian_quotient":
            params += f",ell={self.ell}"
        if self.name == "n_minus_one_ma" and self.shift:
            params += f",shift={self.shift:g}"
        return f"{self.name}({params})"


def log_hessian(n: int, m: int) -> EigenOperator:
    """The log σ_m operator used by the eigenpair and penalization solves."""
    return EigenOperator("hessian_log_sigma_m", n, m)


def elementary_symmetric(lam, m: int) -> np.ndarray:
    """
    All elementary symmetric polynomials e_0..e_m of the last axis of ``lam``.

    Uses the prefix recurrence e_j <- e_j + λ_i e_{j-1}, which is O(n·m) and
    avoids subset enumeration. Returns an array of shape ``(..., m + 1)``;
    entries with j > n are zero.
    """
    lam = np.asarray(lam, dtype=float)
    e = np.zeros(lam.shape[:-1] + (m + 1,))
    e[..., 0] = 1.0
    for i in range(lam.shape[-1]):
        for j in range(min(i + 1, m), 0, -1):
            e[..., j] += lam[..., i] * e[..., j - 1]
    return e


def _sigma(lam: np.ndarray, k: int) -> np.ndarray:
    if k < 0:
        return np.zeros(lam.shape[:-1])
    return elementary_symmetric(lam, k)[..., k]


def sigma_without(lam: np.ndarray, k: int) -> np.ndarray:
    """σ_k(λ|i) for every i, shape (..., n)."""
    n = lam.shape[-1]
    out = np.empty(lam.shape)
    for i in range(n):
        out[..., i] = _sigma(np.delete(lam, i, axis=-1), k)
    return out


def _sigma_without_pair(lam: np.ndarray, k: int) -> np.ndarray:
    """σ_k(λ|ij) for every i != j, shape (..., n, n) with zero diagonal."""
    n = lam.shape[-1]
    out = np.zeros(lam.shape + (n,))
    for i in range(n):
        for j in range(i + 1, n):
            val = _sigma(np.delete(lam, [i, j], axis=-1), k)
            out[..., i, j] = val
            out[..., j, i] = val
    return out


def _as_vector(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim == 0:
        raise DomainError("expected an eigenvalue vector, got a scalar")
    return lam


def _scalar_or_array(x: np.ndarray):
    return float(x) if np.ndim(x) == 0 else x


def sigma_m(lam, m: int):
    """The m-th elementary symmetric polynomial of λ (1 <= m <= n)."""
    lam = _as_vector(lam)
    n = lam.shape[-1]
    if not 1 <= m <= n:
        raise DomainError(f"m must be in [1, {n}], got {m}")
    return _scalar_or_array(_sigma(lam, m))


def sigma_m_partial(lam, m: int, i: int):
    """∂σ_m/∂λ_i, i.e. σ_{m-1} of λ with entry ``i`` removed."""
    lam = _as_vector(lam)
    n = lam.shape[-1]
    if not 1 <= m <= n:
        raise DomainError(f"m must be in [1, {n}], got {m}")
    if not 0 <= i < n:
        raise DomainError(f"index {i} out of range for n={n}")
    return _scalar_or_array(_sigma(np.delete(lam, i, axis=-1), m - 1))


def n_minus_one_transform(lam, shift: float = 0.0) -> np.ndarray:
    """μ_i = (1/(n-1)) Σ_{j≠i} λ_j + shift."""
    lam = _as_vector(lam)
    n = lam.shape[-1]
    return (lam.sum(axis=-1, keepdims=True) - lam) / (n - 1) + shift


def require_cone(op: EigenOperator, lam: np.ndarray) -> None:
    """Raises :class:`ConeViolation` unless every vector is strictly inside op's cone."""
    from .cones import in_cone  # noreorder

    member = in_cone(op.cone, lam)
    if np.all(member.inside):
        return
    margin = np.asarray(member.margin)
    witness = None
    if margin.ndim:
        witness = tuple(int(k) for k in np.unravel_index(np.argmin(margin), margin.shape))
    worst = float(margin.min())
    raise ConeViolation(
        f"eigenvalues outside the cone of {op}: {member.inequality} fails (margin {worst:.3e})",
        inequality=member.inequality,
        margin=worst,
        witness=witness,
    )


def _log_sigma_derivatives(lam: np.ndarray, k: int, order: int):
    """Value, gradient and (if order == 2) Hessian of log σ_k."""
    if k == 0:
        zero = np.zeros(lam.shape)
        hess = np.zeros(lam.shape + (lam.shape[-1],)) if order == 2 else None
        return np.zeros(lam.shape[:-1]), zero, hess
    s = _sigma(lam, k)
    grad = sigma_without(lam, k - 1) / s[..., None]
    hess = None
    if order == 2:
        hess = _sigma_without_pair(lam, k - 2) / s[..., None, None]
        hess = hess - grad[..., :, None] * grad[..., None, :]
    return np.log(s), grad, hess


def _exp_of(value, grad, hess, scale: float):
    """Derivatives of exp(scale·L) from those of L."""
    f = np.exp(scale * value)
    g = scale * grad
    out_grad = f[..., None] * g
    out_hess = None
    if hess is not None:
        out_hess = f[..., None, None] * (scale * hess + g[..., :, None] * g[..., None, :])
    return f, out_grad, out_hess


def _derivatives(op: EigenOperator, lam: np.ndarray, order: int):
    n = op.n
    if op.name == "monge_ampere":
        f = np.log(lam).sum(axis=-1)
        grad = 1.0 / lam
        hess = None
        if order == 2:
            hess = np.zeros(lam.shape + (n,))
            idx = np.arange(n)
            hess[..., idx, idx] = -(grad**2)
        return f, grad, hess
    if op.name == "hessian_log_sigma_m":
        return _log_sigma_derivatives(lam, op.order, order)
    if op.name == "hessian_root_sigma_m":
        return _exp_of(*_log_sigma_derivatives(lam, op.order, order), 1.0 / op.order)
    if op.name == "hessian_quotient":
        vm, gm, hm = _log_sigma_derivatives(lam, op.order, order)
        vl, gl, hl = _log_sigma_derivatives(lam, op.ell, order)
        hess = hm - hl if order == 2 else None
        return _exp_of(vm - vl, gm - gl, hess, 1.0 / (op.order - op.ell))
    if op.name == "n_minus_one_ma":
        mu = n_minus_one_transform(lam, op.shift)
        inv = 1.0 / mu
        f = np.log(mu).sum(axis=-1)
        grad = (inv.sum(axis=-1, keepdims=True) - inv) / (n - 1)
        hess = None
        if order == 2:
            w = inv**2
            total = w.sum(axis=-1)[..., None, None]
            hess = total - w[..., :, None] - w[..., None, :]
            idx = np.arange(n)
            hess[..., idx, idx] += w
            hess = -hess / (n - 1) ** 2
        return f, grad, hess
    raise NotImplementedError(op.name)


def _checked(op: EigenOperator, lam, check: bool) -> np.ndarray:
    lam = _as_vector(lam)
    if lam.shape[-1] != op.n:
        raise DomainError(f"expected {op.n} eigenvalues, got {lam.shape[-1]}")
    if check:
        require_cone(op, lam)
    return lam


def f_eval(op: EigenOperator, lam, check: bool = True):
    """Evaluates f(λ). Raises :class:`ConeViolation` outside the cone."""
    lam = _checked(op, lam, check)
    return _scalar_or_array(_derivatives(op, lam, order=1)[0])


def f_grad(op: EigenOperator, lam, check: bool = True) -> np.ndarray:
    """The partials f_i = ∂f/∂λ_i, shape (..., n)."""
    lam = _checked(op, lam, check)
    return _derivatives(op, lam, order=1)[1]


def f_hessian(op: EigenOperator, lam, check: bool = True) -> np.ndarray:
    """The second partials f_ij, shape (..., n, n)."""
    lam = _checked(op, lam, check)
    hess = _derivatives(op, lam, order=2)[2]
    assert hess is not None
    return hess


def f_inf(op: EigenOperator, mu, i: int) -> float:
    """
    The limit of f(μ + t e_i) as t → ∞, for μ in the Trudinger cone of op.

    Infinite for every catalog entry except the quotient, where it is
    (σ_{m-1}(μ|i) / σ_{ℓ-1}(μ|i))^{1/(m-ℓ)}.
    """
    from .cones import in_tilde_cone  # noreorder

    mu = _as_vector(mu)
    if mu.ndim != 1 or mu.shape[0] != op.n:
        raise DomainError(f"expected a single vector of length {op.n}")
    if not 0 <= i < op.n:
        raise DomainError(f"index {i} out of range for n={op.n}")
    if not in_tilde_cone(op, mu):
        raise DomainError(f"{mu} is not in the Trudinger cone of {op}")
    return float(_f_inf_all(op, mu)[i])


def _f_inf_all(op: EigenOperator, mu: np.ndarray) -> np.ndarray:
    if op.name != "hessian_quotient" or op.ell == 0:
        return np.full(mu.shape, math.inf)
    num = sigma_without(mu, op.order - 1)
    den = sigma_without(mu, op.ell - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / den, math.inf)
    return np.power(np.maximum(ratio, 0.0), 1.0 / (op.order - op.ell))


def f_inf_min(op: EigenOperator, mu) -> np.ndarray | float:
    """min_i f_{∞,i}(μ), batched; callers check Trudinger-cone membership."""
    mu = _as_vector(mu)
    return _scalar_or_array(_f_inf_all(op, mu).min(axis=-1))


def has_infinite_limits(op: EigenOperator) -> bool:
    """True when f_{∞,min} ≡ +∞ on the Trudinger cone."""
    return op.name != "hessian_quotient" or op.ell == 0


class MatrixDerivatives(NamedTuple):
    diagonal: np.ndarray
    """f_i at the sorted eigenvalues, the diagonal of F^{ij̄} in the eigenframe."""
    pair: np.ndarray
    """(f_i - f_j)/(λ_i - λ_j), with the tie limit ½(f_ii + f_jj) - f_ij; zero diagonal."""


def matrix_derivatives(op: EigenOperator, lam) -> MatrixDerivatives:
    """
    First derivatives of F(A) = f(λ(A)) in the eigenframe, plus the divided
    differences entering its second derivative.

    ``lam`` must be sorted in descending order along the last axis.
    """
    lam = _checked(op, lam, check=True)
    if np.any(np.diff(lam, axis=-1) > 0):
        raise DomainError("eigenvalues must be sorted in descending order")
    _, grad, hess = _derivatives(op, lam, order=2)
    assert hess is not None

    diff_lam = lam[..., :, None] - lam[..., None, :]
    diff_f = grad[..., :, None] - grad[..., None, :]
    scale = 1.0 + np.abs(lam[..., :, None]) + np.abs(lam[..., None, :])
    tie = np.abs(diff_lam) < TIE_THRESHOLD * scale
    hdiag = np.diagonal(hess, axis1=-2, axis2=-1)
    limit = 0.5 * (hdiag[..., :, None] + hdiag[..., None, :]) - hess
    with np.errstate(divide="ignore", invalid="ignore"):
        pair = np.where(tie, limit, diff_f / np.where(tie, 1.0, diff_lam))
    idx = np.arange(op.n)
    pair[..., idx, idx] = 0.0
    return MatrixDerivatives(grad, pair)
