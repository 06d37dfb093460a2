import math

import numpy as np
import pytest
from hessenv.eigen_ops import EigenOperator
from hessenv.errors import DomainError, NonConvergenceError
from hessenv.oracles import (
    OracleConfig,
    charpoly_eigenvalues,
    complementarity_residual,
    fd_check,
    fd_hessian,
    linear_solve_sigma1,
    psor_obstacle,
    sigma_bruteforce,
    spectral_upsample,
)
from hessenv.torus import HermitianFormField, PeriodicGrid, real_hessian, trig_field


def test_sigma_bruteforce():
    assert sigma_bruteforce((1, 2, 3), 2) == 11.0
    assert sigma_bruteforce((1, 2, 3), 0) == 1.0
    with pytest.raises(DomainError):
        sigma_bruteforce(np.ones(21), 2)


def test_fd_check():
    assert fd_check(EigenOperator("monge_ampere", 3), (1.0, 2.0, 3.0)) <= 1e-6


def test_fd_check_near_boundary():
    with pytest.raises(DomainError):
        fd_check(EigenOperator("monge_ampere", 2), (1.0, 1e-9))


def test_charpoly_eigenvalues():
    np.testing.assert_allclose(charpoly_eigenvalues([[2, 1], [1, 2]]), [3.0, 1.0])
    np.testing.assert_allclose(charpoly_eigenvalues([[1, 1j], [-1j, 1]]), [2.0, 0.0], atol=1e-12)


def test_fd_hessian_agrees_with_spectral():
    grid = PeriodicGrid(1, 32)
    u = trig_field(grid, [{"wavevector": [1, 1], "amplitude": 0.5, "phase": 0.3}])
    exact = real_hessian(u)
    approx = fd_hessian(u)
    assert np.abs(exact - approx).max() <= 1e-2 * np.abs(exact).max()


def test_spectral_upsample():
    coarse = PeriodicGrid(1, 8)
    fine = PeriodicGrid(1, 16)
    terms = [{"wavevector": [1, 2], "amplitude": 0.7, "phase": 0.4}]
    up = spectral_upsample(trig_field(coarse, terms, constant=0.1), 2)
    assert up.grid == fine
    np.testing.assert_allclose(up.values, trig_field(fine, terms, constant=0.1).values, atol=1e-12)


def test_linear_solve_sigma1():
    grid = PeriodicGrid(1, 16)
    h = trig_field(grid, [{"wavevector": [1, 0], "amplitude": 0.3}])
    sol = linear_solve_sigma1(HermitianFormField.identity(grid), h)
    assert sol.b == pytest.approx(1.0)
    np.testing.assert_allclose(sol.u.values, -h.values / math.pi**2, atol=1e-12)


def test_linear_solve_sigma1_log_form():
    grid = PeriodicGrid(1, 16)
    sol = linear_solve_sigma1(HermitianFormField.identity(grid, 2.0), grid.constant(0.5), log_form=True)
    assert sol.b == pytest.approx(math.log(2.0) - 0.5)
    np.testing.assert_allclose(sol.u.values, 0.0, atol=1e-12)


def test_oracle_config_validation():
    with pytest.raises(DomainError):
        OracleConfig(psor_omega=2.0)
    with pytest.raises(DomainError):
        OracleConfig(psor_max_sweeps=0)


def test_psor_admissible_obstacle_is_its_own_envelope():
    grid = PeriodicGrid(1, 16)
    theta = HermitianFormField.identity(grid)
    h = trig_field(grid, [{"wavevector": [1, 0], "amplitude": 0.005}])
    u = psor_obstacle(theta, h)
    np.testing.assert_allclose(u.values, h.values, atol=1e-12)


def test_psor_obstacle():
    grid = PeriodicGrid(1, 16)
    theta = HermitianFormField.identity(grid)
    h = trig_field(grid, [{"wavevector": [1, 0], "amplitude": 0.3}])
    cfg = OracleConfig()
    u = psor_obstacle(theta, h, cfg)
    assert np.all(u.values <= h.values + 1e-12)
    trace = np.ones(grid.shape)
    assert complementarity_residual(trace, u.values, h.values, grid.spacing) <= cfg.psor_tol
    # the contact set is a band around the minimum of h, and the envelope is below h at the peak
    assert u.values[0, 0] < h.values[0, 0]
    assert u.values[8, 0] == pytest.approx(h.values[8, 0], abs=1e-6)


def test_psor_nonconvergence():
    grid = PeriodicGrid(1, 16)
    theta = HermitianFormField.identity(grid)
    h = trig_field(grid, [{"wavevector": [1, 0], "amplitude": 0.3}])
    with pytest.raises(NonConvergenceError):
        psor_obstacle(theta, h, OracleConfig(psor_max_sweeps=1))
