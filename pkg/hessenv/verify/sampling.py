"""
Random inputs for the property suites: cone points, trig fields, forms.
"""

from functools import lru_cache

import numpy as np

from ..cones import in_cone
from ..eigen_ops import EigenOperator
from ..torus import HermitianFormField, PeriodicGrid, ScalarField, trig_field


def catalog(n: int = 3) -> list[EigenOperator]:
    """One instance of every cataloged operator in dimension ``n`` >= 3."""
    return [
        EigenOperator("monge_ampere", n),
        EigenOperator("hessian_log_sigma_m", n, 2),
        EigenOperator("hessian_root_sigma_m", n, 2),
        EigenOperator("hessian_quotient", n, 2, 1),
        EigenOperator("hessian_quotient", n, 3, 1),
        EigenOperator("n_minus_one_ma", n),
    ]


def cone_points(
    op: EigenOperator, rng: np.random.Generator, size: int, margin: float = 1e-2
) -> np.ndarray:
    """``size`` points of op's cone with margin above ``margin``, by rejection."""
    out: list[np.ndarray] = []
    have = 0
    while have < size:
        lam = rng.uniform(-1.0, 3.0, (4 * size, op.n))
        keep = lam[np.asarray(in_cone(op.cone, lam).margin) > margin]
        out.append(keep)
        have += len(keep)
    return np.concatenate(out)[:size]


def random_trig(
    grid: PeriodicGrid,
    rng: np.random.Generator,
    amplitude: float,
    max_k: int = 2,
    terms: int = 3,
) -> ScalarField:
    """A random trigonometric polynomial with wavevectors in [-max_k, max_k]."""
    spec = [
        {
            "wavevector": rng.integers(-max_k, max_k + 1, grid.dim).tolist(),
            "amplitude": float(rng.uniform(-amplitude, amplitude)),
            "phase": float(rng.uniform(0, 2 * np.pi)),
        }
        for _ in range(terms)
    ]
    return trig_field(grid, spec)


def random_positive_form(n: int, rng: np.random.Generator, floor: float = 0.5) -> np.ndarray:
    """A random Hermitian matrix with eigenvalues in [floor, floor + 2]."""
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(z)
    vals = rng.uniform(floor, floor + 2.0, n)
    return (q * vals) @ np.conj(q.T)


@lru_cache
def linear_obstacle_case(N: int = 64) -> tuple[HermitianFormField, ScalarField]:
    """The bundled envelope case: n = m = 1, θ = ω, h = 0.3·cos(2πx¹)."""
    grid = PeriodicGrid(1, N)
    theta = HermitianFormField.identity(grid)
    h = trig_field(grid, [{"wavevector": [1, 0], "amplitude": 0.3}])
    return theta, h
