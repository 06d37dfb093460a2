"""
Periodic fields on the flat torus C^n/(Z + iZ)^n.

Real axes are ordered (x¹, y¹, ..., xⁿ, yⁿ) with z^j = x^j + i y^j, and a
field's array has one numpy axis per real axis in that order. Derivatives are
spectral (trigonometric interpolation) through :mod:`scipy.fft`.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any

import numpy as np
import scipy.fft

from .errors import DomainError, GridMismatch

logger = logging.getLogger(__name__)

# worker count handed to scipy.fft, set from --threads
_workers: int | None = None


def set_workers(workers: int | None) -> None:
    global _workers
    _workers = workers


@dataclass(frozen=True)
class PeriodicGrid:
    """N points per real axis on the unit torus of complex dimension n."""

    n: int
    N: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"complex dimension must be positive, got {self.n}")
        if self.N < 8 or self.N % 2:
            raise DomainError(f"N must be even and >= 8, got {self.N}")

    @property
    def dim(self) -> int:
        """Number of real axes, 2n."""
        return 2 * self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.dim

    @property
    def size(self) -> int:
        return self.N**self.dim

    @property
    def spacing(self) -> float:
        return 1.0 / self.N

    def coords(self) -> list[np.ndarray]:
        """Coordinate arrays, one per real axis, each of the full grid shape."""
        x = np.arange(self.N) * self.spacing
        return list(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def require_same(self, *grids: "PeriodicGrid") -> None:
        for g in grids:
            if g != self:
                raise GridMismatch(f"grid {g} does not match {self}")

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.shape))

    def constant(self, value: float) -> "ScalarField":
        return ScalarField(self, np.full(self.shape, float(value)))


@lru_cache(maxsize=32)
def _wavenumbers(grid: PeriodicGrid) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """
    Per-axis wavenumbers broadcastable to the grid: the second-derivative set
    (Nyquist kept) and the first-derivative set (Nyquist zeroed).
    """
    k = 2 * np.pi * scipy.fft.fftfreq(grid.N, d=grid.spacing)
    k1 = k.copy()
    k1[grid.N // 2] = 0.0
    full, first = [], []
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = grid.N
        full.append(k.reshape(shape))
        first.append(k1.reshape(shape))
    return full, first


def _fft(values: np.ndarray) -> np.ndarray:
    return scipy.fft.fftn(values, workers=_workers)


def _ifft_real(values: np.ndarray) -> np.ndarray:
    return scipy.fft.ifftn(values, workers=_workers).real


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A finite real value per grid point."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridMismatch(f"values of shape {values.shape} do not fit {self.grid}")
        if not np.all(np.isfinite(values)):
            raise DomainError("scalar field has non-finite values")
        object.__setattr__(self, "values", values)

    def _other(self, other) -> np.ndarray | float:
        if isinstance(other, ScalarField):
            self.grid.require_same(other.grid)
            return other.values
        return float(other)

    def __add__(self, other) -> "ScalarField":
        return ScalarField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other) -> "ScalarField":
        return ScalarField(self.grid, self.values - self._other(other))

    def __mul__(self, other) -> "ScalarField":
        return ScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)

    def sup(self) -> float:
        return float(self.values.max())

    def inf(self) -> float:
        return float(self.values.min())

    def mean(self) -> float:
        return float(self.values.mean())

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def normalized(self, sup: float = -1.0) -> "ScalarField":
        """Shifted by a constant so that its supremum equals ``sup``."""
        return ScalarField(self.grid, (self.values - self.sup()) + sup)


@dataclass(frozen=True, eq=False)
class HermitianFormField:
    """An n×n Hermitian matrix per grid point, stored as (*grid.shape, n, n)."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        n = self.grid.n
        if values.shape != self.grid.shape + (n, n):
            raise GridMismatch(f"form of shape {values.shape} does not fit {self.grid}")
        skew = np.abs(values - np.conj(np.swapaxes(values, -1, -2))).max()
        if skew > 1e-12 * (1.0 + np.abs(values).max()):
            raise DomainError(f"form field is not Hermitian (defect {skew:.2e})")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: PeriodicGrid, matrix) -> "HermitianFormField":
        matrix = np.asarray(matrix, dtype=complex)
        return cls(grid, np.broadcast_to(matrix, grid.shape + matrix.shape).copy())

    @classmethod
    def identity(cls, grid: PeriodicGrid, scale: float = 1.0) -> "HermitianFormField":
        return cls.constant(grid, scale * np.eye(grid.n))

    def __add__(self, other: "HermitianFormField") -> "HermitianFormField":
        self.grid.require_same(other.grid)
        return HermitianFormField(self.grid, self.values + other.values)

    def __mul__(self, scale: float) -> "HermitianFormField":
        return HermitianFormField(self.grid, self.values * float(scale))

    __rmul__ = __mul__

    def is_constant(self) -> bool:
        flat = self.values.reshape((-1, self.grid.n, self.grid.n))
        return bool(np.allclose(flat, flat[0], rtol=0, atol=1e-14))


def second_derivative(u: ScalarField, a: int, b: int) -> np.ndarray:
    """∂_a ∂_b u for real axes a, b."""
    full, first = _wavenumbers(u.grid)
    u_hat = _fft(u.values)
    if a == b:
        return _ifft_real(-(full[a] ** 2) * u_hat)
    return _ifft_real(-first[a] * first[b] * u_hat)


def gradient(u: ScalarField) -> np.ndarray:
    """Real gradient, shape (*grid.shape, 2n)."""
    _, first = _wavenumbers(u.grid)
    u_hat = _fft(u.values)
    return np.stack([_ifft_real(1j * k * u_hat) for k in first], axis=-1)


def real_hessian(u: ScalarField) -> np.ndarray:
    """Real Hessian ∇²u, symmetric, shape (*grid.shape, 2n, 2n)."""
    full, first = _wavenumbers(u.grid)
    u_hat = _fft(u.values)
    dim = u.grid.dim
    out = np.empty(u.grid.shape + (dim, dim))
    for a in range(dim):
        out[..., a, a] = _ifft_real(-(full[a] ** 2) * u_hat)
        for b in range(a + 1, dim):
            val = _ifft_real(-first[a] * first[b] * u_hat)
            out[..., a, b] = val
            out[..., b, a] = val
    return out


def _ddbar_from_hessian(hess: np.ndarray, n: int) -> np.ndarray:
    """
    ∂²/∂z^j∂z̄^k = ¼[(∂xj∂xk + ∂yj∂yk) + i(∂xj∂yk - ∂yj∂xk)] from real second
    derivatives; x^j is axis 2j and y^j is axis 2j + 1.
    """
    out = np.empty(hess.shape[:-2] + (n, n), dtype=complex)
    for j in range(n):
        xj, yj = 2 * j, 2 * j + 1
        out[..., j, j] = 0.25 * (hess[..., xj, xj] + hess[..., yj, yj])
        for k in range(j + 1, n):
            xk, yk = 2 * k, 2 * k + 1
            re = hess[..., xj, xk] + hess[..., yj, yk]
            im = hess[..., xj, yk] - hess[..., yj, xk]
            out[..., j, k] = 0.25 * (re + 1j * im)
            out[..., k, j] = 0.25 * (re - 1j * im)
    return out


def ddbar_values(grid: PeriodicGrid, values: np.ndarray) -> np.ndarray:
    """∂_j∂̄_k of a raw value array, shape (*grid.shape, n, n)."""
    full, first = _wavenumbers(grid)
    u_hat = _fft(values)
    n = grid.n
    out = np.empty(grid.shape + (n, n), dtype=complex)
    for j in range(n):
        xj, yj = 2 * j, 2 * j + 1
        out[..., j, j] = _ifft_real(-0.25 * (full[xj] ** 2 + full[yj] ** 2) * u_hat)
        for k in range(j + 1, n):
            xk, yk = 2 * k, 2 * k + 1
            re = -(first[xj] * first[xk] + first[yj] * first[yk])
            im = -(first[xj] * first[yk] - first[yj] * first[xk])
            val = 0.25 * (_ifft_real(re * u_hat) + 1j * _ifft_real(im * u_hat))
            out[..., j, k] = val
            out[..., k, j] = np.conj(val)
    return out


def spectral_ddbar(u: ScalarField) -> HermitianFormField:
    """The complex Hessian i∂∂̄u as a Hermitian form field."""
    return HermitianFormField(u.grid, ddbar_values(u.grid, u.values))


def laplacian(u: ScalarField) -> np.ndarray:
    """The real Laplacian Δu = Σ_a ∂_a² u."""
    full, _ = _wavenumbers(u.grid)
    ksq = sum(k**2 for k in full)
    return _ifft_real(-ksq * _fft(u.values))


def complex_laplacian_symbol(grid: PeriodicGrid) -> np.ndarray:
    """Fourier symbol of Δ_C = Σ_j ∂_j∂̄_j = ¼Δ."""
    full, _ = _wavenumbers(grid)
    return -0.25 * sum(k**2 for k in full)


def fourier_solve(values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Inverts a Fourier multiplier; modes where the symbol vanishes are set to zero."""
    zero = np.abs(symbol) < 1e-14
    v_hat = np.where(zero, 0.0, _fft(values) / np.where(zero, 1.0, symbol))
    return _ifft_real(v_hat)


def solve_complex_laplacian(rhs: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Mean-zero solution v of Δ_C v = rhs - mean(rhs)."""
    return fourier_solve(rhs, complex_laplacian_symbol(grid))


def eigh_chi(chi: HermitianFormField) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise eigenpairs, eigenvalues sorted in descending order."""
    vals, vecs = np.linalg.eigh(chi.values)
    return vals[..., ::-1], vecs[..., ::-1]


def eigenvalues_chi(chi: HermitianFormField) -> np.ndarray:
    """Pointwise eigenvalues λ(χ), descending, shape (*grid.shape, n)."""
    return np.linalg.eigvalsh(chi.values)[..., ::-1]


def contract_form(coeff: np.ndarray, form: np.ndarray) -> np.ndarray:
    """Σ_{jk} G^{jk̄} H_{jk̄} for Hermitian fields G, H (real result)."""
    return np.einsum("...kj,...jk->...", coeff, form).real


@dataclass
class FieldNorms:
    sup_u: float
    sup_grad: float
    sup_ddbar: float
    sup_hessian: float
    lambda1_max: float

    def to_dict(self) -> dict[str, float]:
        return {
            "sup_u": self.sup_u,
            "sup_grad": self.sup_grad,
            "sup_ddbar": self.sup_ddbar,
            "sup_hessian": self.sup_hessian,
            "lambda1_max": self.lambda1_max,
        }

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(self.to_dict().values())


def norms(u: ScalarField) -> FieldNorms:
    """
    sup|u|, sup|∇u|, sup|∂∂̄u|, sup|∇²u| (pointwise operator norms) and
    sup λ₁(∇²u), the largest Hessian eigenvalue over the grid.
    """
    hess = real_hessian(u)
    hess_eigs = np.linalg.eigvalsh(hess)
    ddbar_eigs = np.linalg.eigvalsh(_ddbar_from_hessian(hess, u.grid.n))
    grad = gradient(u)
    return FieldNorms(
        sup_u=u.sup_norm(),
        sup_grad=float(np.sqrt((grad**2).sum(axis=-1)).max()),
        sup_ddbar=float(np.abs(ddbar_eigs).max()),
        sup_hessian=float(np.abs(hess_eigs).max()),
        lambda1_max=float(hess_eigs[..., -1].max()),
    )


def trig_field(
    grid: PeriodicGrid,
    terms: list[dict[str, Any]],
    constant: float = 0.0,
) -> ScalarField:
    """
    c + Σ a·cos(2π k·x + φ) over terms {wavevector k (2n ints), amplitude a,
    phase φ}. Every wavevector component must be at most N/4 in magnitude.
    """
    coords = grid.coords()
    values = np.full(grid.shape, float(constant))
    for term in terms:
        k = [int(c) for c in term["wavevector"]]
        if len(k) != grid.dim:
            raise DomainError(f"wavevector {k} needs {grid.dim} components")
        if max(abs(c) for c in k) > grid.N // 4:
            raise DomainError(f"wavevector {k} exceeds the band limit N/4 = {grid.N // 4}")
        phase = sum(c * x for c, x in zip(k, coords))
        values += float(term.get("amplitude", 1.0)) * np.cos(
            2 * math.pi * phase + float(term.get("phase", 0.0))
        )
    return ScalarField(grid, values)


def _ordered(values: np.ndarray) -> np.ndarray:
    # x¹ fastest
    return values.reshape(-1, order="F")


def write_field_csv(path: Path, grid: PeriodicGrid, values: np.ndarray) -> None:
    """Header row ``axis_sizes,n,N``, a metadata row, then one value per row."""
    values = np.asarray(values)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["axis_sizes", "n", "N"])
        writer.writerow([" ".join(str(s) for s in values.shape), grid.n, grid.N])
        if values.dtype == bool:
            writer.writerows([int(v)] for v in _ordered(values))
        else:
            writer.writerows([repr(float(v))] for v in _ordered(values))


def read_field_csv(path: Path) -> tuple[PeriodicGrid, np.ndarray]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if [h.strip() for h in header] != ["axis_sizes", "n", "N"]:
            raise DomainError(f"{path} is not a field dump (header {header})")
        sizes, n, N = next(reader)
        shape = tuple(int(s) for s in sizes.split())
        flat = np.array([float(row[0]) for row in reader])
    grid = PeriodicGrid(int(n), int(N))
    return grid, flat.reshape(shape, order="F")


def write_field_bin(path: Path, grid: PeriodicGrid, values: np.ndarray) -> None:
    """Little-endian float64 in the CSV ordering, with a JSON sidecar header."""
    values = np.asarray(values, dtype="<f8")
    _ordered(values).astype("<f8").tofile(path)
    meta = {"axis_sizes": list(values.shape), "n": grid.n, "N": grid.N}
    path.with_suffix(".json").write_text(json.dumps(meta))


def read_field_bin(path: Path) -> tuple[PeriodicGrid, np.ndarray]:
    meta = json.loads(path.with_suffix(".json").read_text())
    flat = np.fromfile(path, dtype="<f8")
    grid = PeriodicGrid(meta["n"], meta["N"])
    return grid, flat.reshape(tuple(meta["axis_sizes"]), order="F")
