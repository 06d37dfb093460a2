import math

import numpy as np
import pytest
from hessenv.eigen_ops import EigenOperator, f_eval
from hessenv.errors import ConeViolation, DomainError, NonConvergenceError
from hessenv.oracles import linear_solve_sigma1
from hessenv.solver import (
    SolverConfig,
    c_sequence_settled,
    eigenpair_lower_bound,
    linearized_apply,
    solve_degenerate,
    solve_eigenpair,
    solve_nondegenerate,
    solve_with_penalty,
    stokes_constant,
)
from hessenv.torus import (
    HermitianFormField,
    PeriodicGrid,
    ScalarField,
    eigenvalues_chi,
    laplacian,
    spectral_ddbar,
    trig_field,
)
from hessenv.verify.suites.solver import quadratic_tail


def _positive_part_squared(grid: PeriodicGrid) -> ScalarField:
    x = grid.coords()[0]
    return ScalarField(grid, np.maximum(0.0, np.cos(2 * math.pi * x)) ** 2)


def test_solver_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(damping=1.0)
    with pytest.raises(DomainError):
        SolverConfig(residual_tol=0.0)
    with pytest.raises(DomainError):
        SolverConfig(eps_reg_schedule=(1e-1, -1e-2))
    cfg = SolverConfig().replace(max_newton_iters=5)
    assert cfg.max_newton_iters == 5
    assert cfg.to_dict()["eps_reg_schedule"] == [1e-1, 1e-2, 1e-3, 1e-4]


def test_zero_right_hand_side(grid_1d):
    op = EigenOperator("monge_ampere", 1)
    u, report = solve_nondegenerate(op, HermitianFormField.identity(grid_1d), grid_1d.zeros())
    np.testing.assert_allclose(u.values, -1.0)
    assert report.constant == pytest.approx(0.0, abs=1e-14)
    assert report.converged
    assert report.iterations == 0


def test_manufactured_solution(grid_1d):
    op = EigenOperator("monge_ampere", 1)
    theta = HermitianFormField.identity(grid_1d)
    u_star = trig_field(
        grid_1d,
        [
            {"wavevector": [1, 0], "amplitude": 0.02},
            {"wavevector": [1, 1], "amplitude": 0.01, "phase": 0.5},
        ],
    )
    h = ScalarField(grid_1d, f_eval(op, eigenvalues_chi(theta + spectral_ddbar(u_star))))
    u, report = solve_nondegenerate(op, theta, h)
    assert np.abs(u.values - u_star.normalized(-1.0).values).max() <= 1e-8
    assert abs(report.constant) <= 1e-8
    assert u.sup() == -1.0
    assert quadratic_tail(report.residual_history)
    assert min(report.cone_margin_history) >= SolverConfig().cone_margin


@pytest.mark.parametrize("name", ["hessian_root_sigma_m", "hessian_log_sigma_m"])
def test_linear_case_matches_fourier_solution(grid_1d, name):
    op = EigenOperator(name, 1, 1)
    theta = HermitianFormField.identity(grid_1d, 2.0)
    h = trig_field(grid_1d, [{"wavevector": [2, 1], "amplitude": 0.3}], constant=0.1)
    u, report = solve_nondegenerate(op, theta, h)
    exact = linear_solve_sigma1(theta, h, log_form=name == "hessian_log_sigma_m")
    np.testing.assert_allclose(u.values - u.mean(), exact.u.values, atol=1e-8)
    assert report.constant == pytest.approx(exact.b, abs=1e-8)


def test_constant_shift_moves_b(grid_1d):
    op = EigenOperator("monge_ampere", 1)
    theta = HermitianFormField.identity(grid_1d)
    h = trig_field(grid_1d, [{"wavevector": [1, 0], "amplitude": 0.1}])
    u1, r1 = solve_nondegenerate(op, theta, h)
    u2, r2 = solve_nondegenerate(op, theta, h + 0.7)
    np.testing.assert_allclose(u1.values, u2.values, atol=1e-8)
    assert r2.constant == pytest.approx(r1.constant - 0.7, abs=1e-8)


def test_initial_iterate_outside_cone(grid_1d):
    op = EigenOperator("monge_ampere", 1)
    theta = HermitianFormField.identity(grid_1d, -1.0)
    with pytest.raises(ConeViolation):
        solve_nondegenerate(op, theta, grid_1d.zeros())


def test_newton_budget(grid_1d):
    op = EigenOperator("monge_ampere", 1)
    theta = HermitianFormField.identity(grid_1d)
    h = trig_field(grid_1d, [{"wavevector": [1, 0], "amplitude": 0.3}])
    with pytest.raises(NonConvergenceError) as exc_info:
        solve_nondegenerate(op, theta, h, SolverConfig(max_newton_iters=1))
    report = exc_info.value.report
    assert report is not None
    assert report.iterations == 1
    assert not report.converged
    assert len(report.residual_history) == 2


def test_linearized_apply_at_identity(grid_1d):
    op = EigenOperator("monge_ampere", 1)
    delta = trig_field(grid_1d, [{"wavevector": [1, 0]}])
    out = linearized_apply(op, HermitianFormField.identity(grid_1d), delta)
    np.testing.assert_allclose(out.values, -math.pi**2 * delta.values, atol=1e-10)


@pytest.mark.parametrize("name", ["hessian_root_sigma_m", "hessian_log_sigma_m"])
def test_linearized_apply_sigma1(grid_2d, name):
    op = EigenOperator(name, 2, 1)
    w = trig_field(grid_2d, [{"wavevector": [1, 0, 0, 1], "amplitude": 0.05}])
    chi = HermitianFormField.identity(grid_2d, 2.0) + spectral_ddbar(w)
    delta = trig_field(
        grid_2d,
        [
            {"wavevector": [2, 0, 1, 0], "amplitude": 0.7},
            {"wavevector": [0, 1, 0, -1], "amplitude": 0.2, "phase": 0.3},
        ],
    )
    out = linearized_apply(op, chi, delta)
    expected = 0.25 * laplacian(delta)
    if name == "hessian_log_sigma_m":
        expected = expected / np.trace(chi.values, axis1=-2, axis2=-1).real
    np.testing.assert_allclose(out.values, expected, atol=1e-10)


def test_reports_record_cone_floor(grid_1d, obstacle_case):
    cfg = SolverConfig()
    op = EigenOperator("monge_ampere", 1)
    h = trig_field(grid_1d, [{"wavevector": [1, 0], "amplitude": 0.1}])
    _, report = solve_nondegenerate(op, HermitianFormField.identity(grid_1d), h, cfg)
    assert report.extra["cone_floor"] == cfg.cone_margin
    assert min(report.cone_margin_history) >= cfg.cone_margin

    theta, obstacle = obstacle_case
    _, report = solve_with_penalty(EigenOperator("hessian_log_sigma_m", 1, 1), theta, obstacle, 1e-1, cfg)
    assert report.extra["cone_floor"] == -cfg.cone_margin
    assert report.extra["eps"] == 1e-1
    assert min(report.cone_margin_history, default=0.0) >= -cfg.cone_margin
    assert report.to_dict()["extra"]["cone_floor"] == -cfg.cone_margin


def test_penalty_requires_positive_eps(obstacle_case):
    theta, h = obstacle_case
    with pytest.raises(DomainError):
        solve_with_penalty(EigenOperator("hessian_log_sigma_m", 1, 1), theta, h, 0.0)


def test_stokes_constant(grid_1d):
    theta = HermitianFormField.identity(grid_1d)
    assert stokes_constant(theta, grid_1d.constant(1.0), 1, 0.0) == pytest.approx(1.0)
    assert eigenpair_lower_bound(theta, grid_1d.constant(3.0), 1, 1.0) == pytest.approx(0.25)


@pytest.mark.parametrize("level, expected", [(1.0, 1.0), (2.0, 0.5)])
def test_eigenpair_constant_data(grid_1d, level, expected):
    op = EigenOperator("hessian_log_sigma_m", 1, 1)
    cfg = SolverConfig(eps_reg_schedule=(1e-8,))
    u, c, report = solve_eigenpair(op, HermitianFormField.identity(grid_1d), grid_1d.constant(level), cfg)
    assert c == pytest.approx(expected, rel=1e-6)
    assert report.constant_name == "c"
    assert report.extra["c_sequence"] == [c]
    assert report.extra["c_settled"]
    np.testing.assert_allclose(u.values, -1.0)


def test_eigenpair_schedule_settles(grid_1d):
    op = EigenOperator("hessian_log_sigma_m", 1, 1)
    cfg = SolverConfig(eps_reg_schedule=(1e-1, 1e-2, 1e-3))
    _, c, report = solve_eigenpair(op, HermitianFormField.identity(grid_1d), grid_1d.constant(1.0), cfg)
    # c = 1/(1 + ε) on each rung
    np.testing.assert_allclose(report.extra["c_sequence"], [1 / 1.1, 1 / 1.01, 1 / 1.001], rtol=1e-8)
    assert report.extra["c_settled"] is True
    assert c == report.extra["c_sequence"][-1]


def test_c_sequence_settled():
    assert c_sequence_settled([])
    assert c_sequence_settled([2.0])
    assert c_sequence_settled([1.0, 1.5, 1.6, 1.61])
    assert not c_sequence_settled([1.0, 1.1, 1.3])
    assert not c_sequence_settled([1.0, 1.5, 1.6, 2.0])
    # growth inside the tolerance is noise
    assert c_sequence_settled([1.0, 1.0 + 1e-12, 1.0 - 1e-12], tol=1e-9)


def test_eigenpair_rejects_bad_data(grid_1d):
    theta = HermitianFormField.identity(grid_1d)
    with pytest.raises(DomainError):
        solve_eigenpair(EigenOperator("monge_ampere", 1), theta, grid_1d.constant(1.0))
    with pytest.raises(DomainError):
        solve_eigenpair(EigenOperator("hessian_log_sigma_m", 1, 1), theta, grid_1d.constant(-1.0))
    with pytest.raises(DomainError):
        solve_eigenpair(EigenOperator("hessian_log_sigma_m", 1, 1), theta, grid_1d.zeros())


def test_degenerate_linear_root_form():
    grid = PeriodicGrid(1, 16)
    op = EigenOperator("hessian_root_sigma_m", 1, 1)
    h = _positive_part_squared(grid)
    u, report = solve_degenerate(op, HermitianFormField.identity(grid), h)
    rungs = report.extra["rungs"]
    assert [r["eps"] for r in rungs] == [1e-1, 1e-2, 1e-3, 1e-4]
    assert all(r["subsolution_accepted"] for r in rungs)
    assert rungs[0]["sup_diff_previous"] is None
    assert u.sup() == -1.0
    # b balances the integral of tr θ = 1 against h + ε
    assert report.constant == pytest.approx(1.0 - h.mean() - 1e-4, abs=1e-8)


def test_degenerate_rejects_negative_data(grid_1d):
    with pytest.raises(DomainError):
        solve_degenerate(
            EigenOperator("hessian_root_sigma_m", 1, 1),
            HermitianFormField.identity(grid_1d),
            grid_1d.constant(-0.1),
        )


@pytest.mark.slow
def test_degenerate_eigenpair(grid_1d):
    op = EigenOperator("hessian_log_sigma_m", 1, 1)
    theta = HermitianFormField.identity(grid_1d)
    u, c, report = solve_eigenpair(op, theta, _positive_part_squared(grid_1d))
    seq = report.extra["c_sequence"]
    assert len(seq) == 4
    assert abs(seq[-1] - seq[-2]) < 0.01 * abs(seq[-2])
    assert all(0.1 <= value <= 10 for value in seq)
    assert u.sup() == -1.0
    assert min(report.cone_margin_history) > 0
    for rung in report.extra["rungs"]:
        assert rung["c"] == pytest.approx(rung["c_integral"], rel=1e-8)
        assert rung["c"] >= rung["c_lower_bound"] * (1 - 1e-12)
