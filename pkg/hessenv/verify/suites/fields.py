import numpy as np

from ...oracles import fd_second_derivative
from ...torus import (
    PeriodicGrid,
    ScalarField,
    ddbar_values,
    fourier_solve,
    laplacian,
    second_derivative,
    solve_complex_laplacian,
    spectral_ddbar,
)
from ..sampling import random_trig
from ..types import CheckOutcome, PropertySpec


def _grid(rng: np.random.Generator, N: int = 16) -> PeriodicGrid:
    return PeriodicGrid(int(rng.integers(1, 3)), N)


def check_fourier_round_trip(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """Δ_C of the Poisson solve gives back the mean-free right-hand side."""
    worst = 0.0
    for _ in range(samples):
        grid = _grid(rng)
        rhs = random_trig(grid, rng, amplitude=1.0, max_k=3).values
        identity = fourier_solve(rhs, np.ones(grid.shape))
        v = solve_complex_laplacian(rhs, grid)
        back = 0.25 * laplacian(ScalarField(grid, v))
        err = max(
            np.abs(identity - rhs).max(),
            np.abs(back - (rhs - rhs.mean())).max(),
        ) / (1.0 + np.abs(rhs).max())
        worst = max(worst, float(err))
    return CheckOutcome(worst <= 1e-10, {"max_error": worst})


def check_ddbar_linear_hermitian(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """i∂∂̄ is linear, Hermitian, and its trace is a quarter of the Laplacian."""
    worst = {"linearity": 0.0, "hermitian": 0.0, "trace": 0.0}
    for _ in range(samples):
        grid = _grid(rng)
        u = random_trig(grid, rng, amplitude=1.0)
        v = random_trig(grid, rng, amplitude=1.0)
        a, b = rng.normal(size=2)
        lhs = ddbar_values(grid, a * u.values + b * v.values)
        rhs = a * ddbar_values(grid, u.values) + b * ddbar_values(grid, v.values)
        form = spectral_ddbar(u).values
        scale = 1.0 + np.abs(form).max()
        trace = np.trace(form, axis1=-2, axis2=-1)
        worst["linearity"] = max(worst["linearity"], float(np.abs(lhs - rhs).max() / scale))
        worst["hermitian"] = max(
            worst["hermitian"],
            float(np.abs(form - np.conj(np.swapaxes(form, -1, -2))).max() / scale),
        )
        worst["trace"] = max(
            worst["trace"], float(np.abs(trace - 0.25 * laplacian(u)).max() / scale)
        )
    return CheckOutcome(all(e <= 1e-10 for e in worst.values()), worst)


def check_fd_agreement(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """Spectral second derivatives against fourth-order differences at N = 32."""
    worst_err = 0.0
    worst = None
    for _ in range(samples):
        grid = PeriodicGrid(1, 32)
        u = random_trig(grid, rng, amplitude=1.0)
        for a in range(grid.dim):
            for b in range(a, grid.dim):
                exact = second_derivative(u, a, b)
                approx = fd_second_derivative(u, a, b)
                err = float(np.abs(exact - approx).max() / (1.0 + np.abs(exact).max()))
                if err > worst_err:
                    worst_err = err
                    worst = {"axes": [a, b]}
    return CheckOutcome(worst_err <= 1e-2, {"max_relative_error": worst_err}, worst)


def check_constant_fields(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """Derivatives of a constant vanish."""
    worst = 0.0
    for _ in range(samples):
        grid = _grid(rng)
        c = ScalarField(grid, np.full(grid.shape, float(rng.normal())))
        worst = max(worst, float(np.abs(spectral_ddbar(c).values).max()))
    return CheckOutcome(worst <= 1e-12, {"max_value": worst})


tests: list[PropertySpec] = [
    {"name": "fourier-round-trip", "check": check_fourier_round_trip, "samples": 20, "seed": 21},
    {"name": "ddbar-algebra", "check": check_ddbar_linear_hermitian, "samples": 20, "seed": 22},
    {"name": "fd-agreement", "check": check_fd_agreement, "samples": 10, "seed": 23},
    {"name": "constant-fields", "check": check_constant_fields, "samples": 10, "seed": 24},
]
