import math

import numpy as np
import pytest
from hessenv.diagnostics import (
    DEGENERATE,
    HESSIAN_FLOOR,
    epsilon_trend,
    estimate_monitor,
    eta,
    eta_prime,
    eta_second,
    xi,
    xi_prime,
    xi_second,
)
from hessenv.eigen_ops import EigenOperator
from hessenv.envelope import solve_penalized
from hessenv.errors import InsufficientData
from hessenv.solver import solve_nondegenerate
from hessenv.torus import (
    HermitianFormField,
    PeriodicGrid,
    gradient,
    real_hessian,
    spectral_ddbar,
    trig_field,
)

SCHEDULE = (1e-1, 1e-2, 1e-3)


def test_xi_eta_identities():
    s = np.linspace(0.0, 4.0, 9)
    L = 1.5
    np.testing.assert_allclose(xi_second(s, L), 3 * xi_prime(s, L) ** 2)
    np.testing.assert_allclose(eta_second(s, 4.0), 3 * eta_prime(s, 4.0) ** 2)
    assert eta(4.0, 4.0) == pytest.approx(0.0)
    assert xi(5 * L**2, L) == math.inf


def test_constant_field_is_degenerate(grid_1d):
    op = EigenOperator("monge_ampere", 1)
    report = estimate_monitor(grid_1d.constant(-1.0), HermitianFormField.identity(grid_1d), op)
    assert report.degenerate
    assert report.status == DEGENERATE
    assert report.L == pytest.approx(1.0)
    assert report.Q_max is None
    assert report.F_diag_range == pytest.approx((1.0, 1.0))
    assert report.ordering_ok


def test_cosine_monitor(grid_1d):
    a = 0.05
    u = trig_field(grid_1d, [{"wavevector": [1, 0], "amplitude": a}])
    op = EigenOperator("monge_ampere", 1)
    report = estimate_monitor(u, HermitianFormField.identity(grid_1d), op)
    assert not report.degenerate
    assert report.lambda1_max == pytest.approx(4 * math.pi**2 * a)
    assert report.L == pytest.approx(4 * math.pi**2 * a + 1)
    assert report.rho_positive
    assert report.rho_bounded
    assert report.hessian_bound_ok
    assert report.Q_max is not None and math.isfinite(report.Q_max)
    assert report.argmax is not None and len(report.argmax) == 2
    assert report.penalized["B"] == pytest.approx(-a)
    assert report.cone_violation is None
    d = report.to_dict()
    assert d["norms"]["sup_u"] == pytest.approx(a)


def test_monitor_outside_cone(grid_1d):
    u = trig_field(grid_1d, [{"wavevector": [1, 0], "amplitude": 1.0}])
    op = EigenOperator("monge_ampere", 1)
    report = estimate_monitor(u, HermitianFormField.identity(grid_1d), op)
    assert report.cone_violation is not None
    assert report.cone_violation["error"] == "ConeViolation"
    assert report.F_diag_range is None


def test_epsilon_trend_needs_three_rungs():
    with pytest.raises(InsufficientData):
        epsilon_trend([])


def _solved_cosine(N: int):
    grid = PeriodicGrid(1, N)
    op = EigenOperator("monge_ampere", 1)
    theta = HermitianFormField.identity(grid)
    h = trig_field(grid, [{"wavevector": [1, 0], "amplitude": 0.1}])
    u, _ = solve_nondegenerate(op, theta, h)
    return u, theta, op


def test_xi_prime_bounds_on_solution():
    u, theta, op = _solved_cosine(32)
    report = estimate_monitor(u, theta, op)
    assert not report.degenerate
    assert report.xi_prime_in_bounds
    L = report.L
    assert report.xi_prime_at_max is not None
    assert 1 / (18 * L**2) <= report.xi_prime_at_max <= 1 / (3 * L**2)
    assert report.cone_violation is None


def test_monitor_stable_under_refinement():
    coarse = estimate_monitor(*_solved_cosine(32))
    fine = estimate_monitor(*_solved_cosine(64))
    assert fine.lambda1_max == pytest.approx(coarse.lambda1_max, rel=1e-3)
    assert coarse.Q_max is not None and fine.Q_max is not None
    assert fine.Q_max == pytest.approx(coarse.Q_max, abs=1e-2)


def test_penalized_monitor(grid_1d):
    op = EigenOperator("monge_ampere", 1)
    theta = HermitianFormField.identity(grid_1d)
    u = trig_field(grid_1d, [{"wavevector": [1, 0], "amplitude": 0.05}])
    h = trig_field(grid_1d, [{"wavevector": [1, 0], "amplitude": 0.3}])
    report = estimate_monitor(u, theta, op, h=h)
    shifted = estimate_monitor(u + 0.7, theta, op, h=h)

    # e^{-A(u - inf u)} does not see constants, B does
    assert shifted.penalized["Q_max"] == pytest.approx(report.penalized["Q_max"])
    assert shifted.penalized["B"] == pytest.approx(report.penalized["B"] + 0.7)
    assert shifted.Q_max != pytest.approx(report.Q_max)

    idx = tuple(report.penalized["argmax"])
    L = report.L
    rho = real_hessian(u)[idx] + L * np.eye(2)
    s = float((rho**2).sum())
    assert report.penalized["xi_at_max"] == pytest.approx(float(xi(s, L, 100.0)))
    assert report.penalized["xi_at_max"] != pytest.approx(float(xi(s, L)))

    grad_sq = (gradient(u) ** 2).sum(axis=-1)
    widened = grad_sq.max() + 4 * (gradient(h) ** 2).sum(axis=-1).max()
    assert report.penalized["eta_at_max"] == pytest.approx(float(eta(grad_sq[idx], widened)))


def test_epsilon_trend_constant_obstacle():
    grid = PeriodicGrid(2, 8)
    theta = HermitianFormField.identity(grid)
    op = EigenOperator("hessian_log_sigma_m", 2, 1)
    states = [solve_penalized(op, theta, grid.constant(-0.3), eps) for eps in SCHEDULE]
    trend = epsilon_trend(states)
    lo, hi = trend.overshoot_ratio_range
    assert lo == pytest.approx(math.log(2), abs=1e-6)
    assert hi == pytest.approx(math.log(2), abs=1e-6)
    # sup|∇²u| is round-off for a constant field
    assert max(s.estimate.norms.sup_hessian for s in states) <= HESSIAN_FLOOR
    assert trend.hessian_variation_factor == 1.0
    assert trend.residual_slopes["sup_overshoot"] == pytest.approx(1.0, abs=1e-6)
    assert trend.eps == list(SCHEDULE)


def test_epsilon_trend_admissible_obstacle():
    grid = PeriodicGrid(2, 8)
    h = trig_field(grid, [{"wavevector": [1, 0, 0, 0], "amplitude": 0.05}])
    # with θ = ω - i∂∂̄h the penalized solution is h + ε·log 2 exactly
    theta = HermitianFormField.identity(grid) + (-1.0) * spectral_ddbar(h)
    op = EigenOperator("hessian_log_sigma_m", 2, 1)
    states = []
    for eps in SCHEDULE:
        states.append(solve_penalized(op, theta, h, eps, warm=states[-1].u if states else None))
    for state in states:
        np.testing.assert_allclose(state.u.values, h.values + state.eps * math.log(2), atol=1e-9)
        assert state.contact_mask.all()
    trend = epsilon_trend(states)
    assert trend.hessian_variation_factor == pytest.approx(1.0, abs=1e-3)
    lo, hi = trend.overshoot_ratio_range
    assert hi / lo == pytest.approx(1.0, abs=1e-3)


def test_epsilon_trend_flat_rung_is_unbounded():
    grid = PeriodicGrid(1, 16)
    theta = HermitianFormField.identity(grid)
    op = EigenOperator("hessian_log_sigma_m", 1, 1)
    curved = trig_field(grid, [{"wavevector": [1, 0], "amplitude": 0.05}])
    states = [
        solve_penalized(op, theta, curved, 1e-1),
        solve_penalized(op, theta, curved, 1e-2),
        solve_penalized(op, theta, grid.constant(0.0), 1e-3),
    ]
    assert epsilon_trend(states).hessian_variation_factor == math.inf
