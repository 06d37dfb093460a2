import numpy as np

from ...eigen_ops import EigenOperator, f_eval
from ...oracles import linear_solve_sigma1
from ...solver import SolverConfig, linearized_apply, solve_nondegenerate
from ...torus import (
    HermitianFormField,
    PeriodicGrid,
    ScalarField,
    eigenvalues_chi,
    spectral_ddbar,
)
from ..sampling import random_positive_form, random_trig
from ..types import CheckOutcome, PropertySpec

_GRID = PeriodicGrid(2, 16)
_TOL = 1e-8


def _ops() -> list[EigenOperator]:
    return [
        EigenOperator("monge_ampere", 2),
        EigenOperator("hessian_root_sigma_m", 2, 1),
        EigenOperator("hessian_quotient", 2, 2, 1),
        EigenOperator("n_minus_one_ma", 2),
    ]


def _theta(rng: np.random.Generator) -> HermitianFormField:
    return HermitianFormField.constant(_GRID, random_positive_form(2, rng, floor=1.0))


def _small_field(rng: np.random.Generator) -> ScalarField:
    return random_trig(_GRID, rng, amplitude=2e-3, max_k=1)


def _manufactured(op, theta, u_star) -> ScalarField:
    lam = eigenvalues_chi(theta + spectral_ddbar(u_star))
    return ScalarField(u_star.grid, np.asarray(f_eval(op, lam)))


def quadratic_tail(history: list[float], factor: float = 100.0, floor: float = 1e-11) -> bool:
    """Once below 1e-3 each residual is at most factor·(previous)², or at the floor."""
    return all(
        r1 <= max(factor * r0**2, floor)
        for r0, r1 in zip(history, history[1:])
        if r0 < 1e-3
    )


def check_manufactured(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """Solving for h = f(θ + i∂∂̄u*) gives back u* and b = 0, quadratically."""
    worst_err = 0.0
    worst = None
    tails_ok = True
    for _ in range(samples):
        theta = _theta(rng)
        u_star = _small_field(rng)
        for op in _ops():
            h = _manufactured(op, theta, u_star)
            u, report = solve_nondegenerate(op, theta, h)
            err = max(
                float(np.abs(u.values - u_star.normalized(-1.0).values).max()),
                abs(report.constant),
            )
            tails_ok &= quadratic_tail(report.residual_history)
            if err > worst_err:
                worst_err = err
                worst = {"operator": str(op), "residual_history": report.residual_history}
    return CheckOutcome(
        worst_err <= _TOL and tails_ok,
        {"max_error": worst_err, "quadratic_tail": tails_ok},
        worst,
    )


def check_linear_oracle(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """m = 1 solves, plain and logarithmic, against the exact Fourier solution."""
    worst_err = 0.0
    worst = None
    for _ in range(samples):
        theta = _theta(rng)
        h = random_trig(_GRID, rng, amplitude=0.3, max_k=2)
        for log_form in (False, True):
            name = "hessian_log_sigma_m" if log_form else "hessian_root_sigma_m"
            op = EigenOperator(name, 2, 1)
            u, report = solve_nondegenerate(op, theta, h)
            exact = linear_solve_sigma1(theta, h, log_form=log_form)
            err = max(
                float(np.abs(u.values - exact.u.normalized(-1.0).values).max()),
                abs(report.constant - exact.b),
            )
            if err > worst_err:
                worst_err = err
                worst = {"operator": str(op), "b": report.constant, "b_exact": exact.b}
    return CheckOutcome(worst_err <= _TOL, {"max_error": worst_err}, worst)


def check_translation(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """
    h + const leaves u alone and shifts b by const; translating h by a grid
    vector translates u.
    """
    worst_err = 0.0
    op = _ops()[0]
    axes = tuple(range(_GRID.dim))
    for _ in range(samples):
        theta = _theta(rng)
        h = _manufactured(op, theta, _small_field(rng))
        u, report = solve_nondegenerate(op, theta, h)

        const = float(rng.uniform(-1.0, 1.0))
        raised, raised_report = solve_nondegenerate(op, theta, h + const)
        err = max(
            float(np.abs(raised.values - u.values).max()),
            abs(report.constant - const - raised_report.constant),
        )

        shift = tuple(int(s) for s in rng.integers(0, _GRID.N, _GRID.dim))
        moved, _ = solve_nondegenerate(op, theta, ScalarField(_GRID, np.roll(h.values, shift, axes)))
        err = max(err, float(np.abs(moved.values - np.roll(u.values, shift, axes)).max()))
        worst_err = max(worst_err, err)
    return CheckOutcome(worst_err <= _TOL, {"max_error": worst_err})


def check_uniqueness(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """Different starting points reach the same (u, b)."""
    worst_err = 0.0
    cfg = SolverConfig()
    for _ in range(samples):
        theta = _theta(rng)
        op = _ops()[2]
        h = _manufactured(op, theta, _small_field(rng))
        u1, r1 = solve_nondegenerate(op, theta, h, cfg)
        u2, r2 = solve_nondegenerate(op, theta, h, cfg, u0=_small_field(rng))
        err = max(float(np.abs(u1.values - u2.values).max()), abs(r1.constant - r2.constant))
        worst_err = max(worst_err, err)
    return CheckOutcome(worst_err <= _TOL, {"max_error": worst_err})


def check_linearization(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """
    At constant χ the linearized operator is symmetric and non-positive; at a
    varying χ it matches a central difference of f along i∂∂̄δu.
    """
    worst = {"symmetry": 0.0, "definiteness": 0.0, "directional": 0.0}
    for _ in range(samples):
        theta = _theta(rng)
        v = random_trig(_GRID, rng, amplitude=1.0, max_k=2)
        w = random_trig(_GRID, rng, amplitude=1.0, max_k=2)
        for op in _ops():
            Lv = linearized_apply(op, theta, v).values
            Lw = linearized_apply(op, theta, w).values
            scale = 1.0 + np.abs(Lv).mean() * np.abs(w.values).mean()
            asym = abs(float((Lv * w.values).mean() - (v.values * Lw).mean()))
            worst["symmetry"] = max(worst["symmetry"], asym / scale)
            energy = float((Lv * v.values).mean())
            worst["definiteness"] = max(worst["definiteness"], energy / scale)

            chi = theta + spectral_ddbar(_small_field(rng))
            dv = v * 1e-3
            t = 1e-4
            plus = f_eval(op, eigenvalues_chi(chi + spectral_ddbar(dv * t)))
            minus = f_eval(op, eigenvalues_chi(chi + spectral_ddbar(dv * -t)))
            fd = (np.asarray(plus) - np.asarray(minus)) / (2 * t)
            exact = linearized_apply(op, chi, dv).values
            worst["directional"] = max(
                worst["directional"], float(np.abs(fd - exact).max() / (1.0 + np.abs(exact).max()))
            )
    passed = worst["symmetry"] <= 1e-10 and worst["definiteness"] <= 1e-10
    passed = passed and worst["directional"] <= 1e-6
    return CheckOutcome(passed, worst)


tests: list[PropertySpec] = [
    {"name": "manufactured-recovery", "check": check_manufactured, "samples": 2, "seed": 31},
    {"name": "linear-oracle", "check": check_linear_oracle, "samples": 2, "seed": 32},
    {"name": "translation-covariance", "check": check_translation, "samples": 2, "seed": 33},
    {"name": "uniqueness", "check": check_uniqueness, "samples": 2, "seed": 34},
    {"name": "linearization", "check": check_linearization, "samples": 2, "seed": 35},
]
