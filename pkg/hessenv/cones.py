"""
Cone membership, the Trudinger cone Γ̃ and C-subsolution certificates.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Literal, NamedTuple

import numpy as np

from .constants import TILDE_BISECTIONS, TILDE_T_SCALE
from .eigen_ops import (
    EigenOperator,
    elementary_symmetric,
    f_inf_min,
    has_infinite_limits,
    n_minus_one_transform,
)
from .errors import DomainError

if TYPE_CHECKING:
    from .torus import HermitianFormField, ScalarField

logger = logging.getLogger(__name__)

ConeKind = Literal["gamma_n", "gamma_m", "operator_domain"]


@dataclass(frozen=True)
class ConeSpec:
    """
    An open symmetric convex cone in R^n containing Γ_n.

    ``gamma_m`` is {σ_l > 0 for l <= m}. ``operator_domain`` is the domain of
    an operator that is not a Γ_m cone; only n_minus_one_ma uses it, where it
    is {μ(λ) ∈ Γ_n} for the transformed vector μ.
    """

    kind: ConeKind
    n: int
    m: int | None = None
    op_name: str | None = None
    shift: float = 0.0

    def __str__(self) -> str:
        if self.kind == "gamma_m":
            return f"Γ_{self.m}(n={self.n})"
        if self.kind == "gamma_n":
            return f"Γ_n(n={self.n})"
        return f"Γ[{self.op_name}](n={self.n})"


def gamma_n(n: int) -> ConeSpec:
    return ConeSpec("gamma_n", n)


def gamma_m(n: int, m: int) -> ConeSpec:
    if not 1 <= m <= n:
        raise DomainError(f"m must be in [1, {n}], got {m}")
    return ConeSpec("gamma_m", n, m=m)


def operator_cone(op: EigenOperator) -> ConeSpec:
    if op.name == "monge_ampere":
        return gamma_n(op.n)
    if op.name == "n_minus_one_ma":
        return ConeSpec("operator_domain", op.n, op_name=op.name, shift=op.shift)
    return gamma_m(op.n, op.order)


class Membership(NamedTuple):
    inside: Any
    """bool, or a bool array over the batch"""
    margin: Any
    """min over the defining inequalities; > 0 iff strictly interior"""
    inequality: str
    """the inequality attaining the margin (at the worst point of a batch)"""


def in_cone(cone: ConeSpec, lam) -> Membership:
    """Membership of λ (shape (n,) or (..., n)) in ``cone``, with the margin."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != cone.n:
        raise DomainError(f"expected vectors of length {cone.n}, got {lam.shape[-1]}")
    if cone.kind == "gamma_m":
        assert cone.m is not None
        sig = elementary_symmetric(lam, cone.m)[..., 1:]
        arg = sig.argmin(axis=-1)
        margin = sig.min(axis=-1)
        names = [f"sigma_{k + 1} > 0" for k in range(cone.m)]
    else:
        vals = lam if cone.kind == "gamma_n" else n_minus_one_transform(lam, cone.shift)
        label = "lambda" if cone.kind == "gamma_n" else "mu"
        arg = vals.argmin(axis=-1)
        margin = vals.min(axis=-1)
        names = [f"{label}_{k} > 0" for k in range(cone.n)]
    worst = np.unravel_index(np.argmin(margin), np.shape(margin)) if np.ndim(margin) else ()
    inequality = names[int(np.asarray(arg)[worst])]
    inside = margin > 0
    if np.ndim(margin) == 0:
        return Membership(bool(inside), float(margin), inequality)
    return Membership(inside, margin, inequality)


def _tilde_ok(op: EigenOperator, mu: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Whether μ + t e_i is in the cone for every i, batched over μ."""
    n = op.n
    bumped = mu[..., None, :] + t[..., None, None] * np.eye(n)
    return np.all(in_cone(op.cone, bumped).inside, axis=-1)


def tilde_threshold(op: EigenOperator, mu):
    """
    The smallest t with μ + t e_i ∈ Γ for every i, or +inf when none exists
    below t_max = 1e6·(1 + |μ|). Found by bisection, which is valid because
    membership of μ + t e_i is monotone in t for the cataloged cones.
    """
    mu = np.asarray(mu, dtype=float)
    t_max = TILDE_T_SCALE * (1.0 + np.linalg.norm(mu, axis=-1))
    ok_max = _tilde_ok(op, mu, t_max)
    lo = np.zeros_like(t_max)
    hi = t_max.copy()
    ok_zero = _tilde_ok(op, mu, lo)
    hi = np.where(ok_zero, 0.0, hi)
    for _ in range(TILDE_BISECTIONS):
        mid = 0.5 * (lo + hi)
        ok = _tilde_ok(op, mu, mid)
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
        if np.all(hi - lo <= 1e-12 * (1.0 + hi)):
            break
    out = np.where(ok_max, hi, math.inf)
    return float(out) if out.ndim == 0 else out


def in_tilde_cone(op: EigenOperator, mu):
    """Whether μ lies in the Trudinger cone Γ̃ of op's cone (batched)."""
    thr = tilde_threshold(op, mu)
    if np.ndim(thr) == 0:
        return bool(math.isfinite(thr))
    return np.isfinite(thr)


UNBOUNDED = "unbounded"


@dataclass
class SubsolutionCertificate:
    """
    Result of checking that θ + i∂∂̄u̲ is a C-subsolution for f = h.

    ``sigma_0`` is half the worst margin, or 1 when f_{∞,min} ≡ +∞.
    ``unbounded`` flags the latter case.
    """

    accepted: bool
    sigma_0: float
    worst_point: tuple[int, ...]
    worst_margin: float
    unbounded: bool = False
    outside_tilde: list[tuple[int, ...]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "accepted": self.accepted,
            "sigma_0": self.sigma_0,
            "sigma_0_kind": UNBOUNDED if self.unbounded else "margin",
            "worst_point": list(self.worst_point),
            "worst_margin": self.worst_margin,
            "outside_tilde": [list(p) for p in self.outside_tilde[:10]],
        }


def subsolution_check(
    op: EigenOperator,
    theta: "HermitianFormField",
    u_sub: "ScalarField",
    h: "ScalarField",
) -> SubsolutionCertificate:
    """Certifies u̲ pointwise: μ(x) ∈ Γ̃ and f_{∞,min}(μ(x)) > h(x)."""
    from .torus import eigenvalues_chi, spectral_ddbar  # noreorder

    theta.grid.require_same(u_sub.grid, h.grid)
    chi = theta + spectral_ddbar(u_sub)
    mu = eigenvalues_chi(chi)
    inside = np.asarray(in_tilde_cone(op, mu))
    if has_infinite_limits(op):
        margin = np.where(inside, math.inf, -math.inf)
    else:
        limits = np.asarray(f_inf_min(op, np.where(inside[..., None], mu, 1.0)))
        margin = np.where(inside, limits - h.values, -math.inf)

    worst_idx = np.unravel_index(np.argmin(margin), margin.shape)
    worst_point = tuple(int(k) for k in worst_idx)
    worst_margin = float(margin[worst_idx])
    outside = [tuple(int(k) for k in p) for p in np.argwhere(~inside)]
    accepted = bool(worst_margin > 0 and inside.all())
    unbounded = has_infinite_limits(op)
    sigma_0 = 1.0 if unbounded else 0.5 * worst_margin
    cert = SubsolutionCertificate(
        accepted=accepted,
        sigma_0=sigma_0,
        worst_point=worst_point,
        worst_margin=worst_margin,
        unbounded=unbounded,
        outside_tilde=outside,
    )
    logger.info(
        f"Subsolution check for {op}: {'accepted' if accepted else 'rejected'}"
        f" (worst margin {worst_margin:.4g} at {worst_point})"
    )
    return cert
