import math

import numpy as np
import pytest
from hessenv.eigen_ops import (
    EigenOperator,
    elementary_symmetric,
    f_eval,
    f_grad,
    f_hessian,
    f_inf,
    f_inf_min,
    has_infinite_limits,
    log_hessian,
    matrix_derivatives,
    n_minus_one_transform,
    sigma_m,
    sigma_m_partial,
    sigma_without,
)
from hessenv.errors import ConeViolation, DomainError
from hessenv.oracles import f_inf_numeric, fd_gradient, sigma_bruteforce


@pytest.mark.parametrize(
    "lam, m, expected",
    [
        ((1, 1, 1), 2, 3.0),
        ((1, 2, 3), 2, 11.0),
        ((0, 5, 7), 3, 0.0),
    ],
)
def test_sigma_m(lam, m, expected):
    assert sigma_m(lam, m) == pytest.approx(expected)


def test_sigma_m_batched(rng):
    lam = rng.uniform(-5, 5, (4, 7, 5))
    out = sigma_m(lam, 3)
    assert out.shape == (4, 7)
    assert out[2, 3] == pytest.approx(sigma_bruteforce(lam[2, 3], 3), rel=1e-12, abs=1e-12)


def test_elementary_symmetric_all_orders():
    e = elementary_symmetric([1.0, 2.0, 3.0], 3)
    np.testing.assert_allclose(e, [1.0, 6.0, 11.0, 6.0])


@pytest.mark.parametrize(
    "lam, m, i, expected",
    [
        ((1, 2, 3), 2, 0, 5.0),
        ((1, 1, 1), 1, 1, 1.0),
        ((4, 9), 2, 0, 9.0),
    ],
)
def test_sigma_m_partial(lam, m, i, expected):
    assert sigma_m_partial(lam, m, i) == pytest.approx(expected)


def test_sigma_without_matches_partials():
    lam = np.array([1.0, 2.0, 3.0, -0.5])
    out = sigma_without(lam, 2)
    for i in range(4):
        assert out[i] == pytest.approx(sigma_m_partial(lam, 3, i))


@pytest.mark.parametrize(
    "call",
    [
        lambda: sigma_m([1.0, 2.0], 0),
        lambda: sigma_m([1.0, 2.0], 3),
        lambda: sigma_m_partial([1.0, 2.0], 1, 2),
        lambda: sigma_m(1.0, 1),
    ],
)
def test_sigma_domain_errors(call):
    with pytest.raises(DomainError):
        call()


def test_operator_validation():
    with pytest.raises(DomainError):
        EigenOperator("nope", 3)  # type: ignore[arg-type]
    with pytest.raises(DomainError):
        EigenOperator("hessian_log_sigma_m", 3)
    with pytest.raises(DomainError):
        EigenOperator("hessian_quotient", 3, 2, 2)
    with pytest.raises(DomainError):
        EigenOperator("n_minus_one_ma", 1)
    assert EigenOperator("monge_ampere", 4).order == 4
    assert EigenOperator("hessian_root_sigma_m", 3, 2, ell=1).ell == 0
    assert str(EigenOperator("hessian_quotient", 3, 2, 1)) == "hessian_quotient(n=3,m=2,ell=1)"


@pytest.mark.parametrize(
    "op, lam, expected",
    [
        (EigenOperator("monge_ampere", 3), (1, 1, 1), 0.0),
        (EigenOperator("hessian_log_sigma_m", 3, 2), (1, 1, 1), math.log(3)),
        (EigenOperator("hessian_quotient", 3, 2, 1), (1, 2, 3), 11 / 6),
        (EigenOperator("hessian_root_sigma_m", 3, 2), (1, 2, 3), math.sqrt(11)),
        (EigenOperator("n_minus_one_ma", 2), (3, 1), math.log(3)),
    ],
)
def test_f_eval(op, lam, expected):
    assert f_eval(op, lam) == pytest.approx(expected)


def test_f_eval_outside_cone():
    op = EigenOperator("hessian_log_sigma_m", 3, 2)
    with pytest.raises(ConeViolation) as exc_info:
        f_eval(op, (2, 2, -1))
    assert exc_info.value.inequality == "sigma_2 > 0"
    assert exc_info.value.margin == pytest.approx(0.0, abs=1e-12)


def test_f_eval_batch_witness():
    op = EigenOperator("monge_ampere", 2)
    lam = np.ones((3, 4, 2))
    lam[1, 2] = (1.0, -0.5)
    with pytest.raises(ConeViolation) as exc_info:
        f_eval(op, lam)
    assert exc_info.value.witness == (1, 2)


@pytest.mark.parametrize(
    "op, lam, expected",
    [
        (EigenOperator("monge_ampere", 2), (2, 4), (0.5, 0.25)),
        (EigenOperator("hessian_log_sigma_m", 2, 1), (3, 5), (0.125, 0.125)),
    ],
)
def test_f_grad(op, lam, expected):
    np.testing.assert_allclose(f_grad(op, lam), expected)


@pytest.mark.parametrize(
    "op",
    [
        EigenOperator("hessian_quotient", 3, 2, 1),
        EigenOperator("hessian_root_sigma_m", 3, 2),
        EigenOperator("n_minus_one_ma", 3),
        EigenOperator("monge_ampere", 3),
    ],
)
def test_f_grad_against_central_differences(op):
    lam = np.array([1.0, 2.0, 3.0])
    exact = f_grad(op, lam)
    np.testing.assert_allclose(exact, fd_gradient(op, lam), rtol=1e-6)


def test_f_hessian_symmetric_negative_semidefinite(rng):
    op = EigenOperator("hessian_quotient", 3, 2, 1)
    lam = rng.uniform(0.5, 3.0, (20, 3))
    hess = f_hessian(op, lam)
    np.testing.assert_allclose(hess, np.swapaxes(hess, -1, -2), atol=1e-12)
    assert np.linalg.eigvalsh(hess).max() <= 1e-10


def test_f_inf():
    assert f_inf(EigenOperator("monge_ampere", 3), (1, 1, 1), 0) == math.inf
    assert f_inf(EigenOperator("hessian_quotient", 2, 2, 1), (2, 2), 0) == pytest.approx(2.0)
    assert f_inf(EigenOperator("hessian_quotient", 3, 2, 1), (1, 1, 1), 2) == pytest.approx(2.0)


def test_f_inf_against_numeric_limit():
    op = EigenOperator("hessian_quotient", 3, 2, 1)
    mu = np.array([1.0, 2.0, 0.5])
    for i in range(3):
        assert f_inf(op, mu, i) == pytest.approx(f_inf_numeric(op, mu, i), rel=1e-6)


def test_f_inf_outside_trudinger_cone():
    with pytest.raises(DomainError):
        f_inf(EigenOperator("monge_ampere", 3), (1, 1, -0.5), 0)


def test_infinite_limits():
    assert has_infinite_limits(EigenOperator("hessian_log_sigma_m", 3, 2))
    assert not has_infinite_limits(EigenOperator("hessian_quotient", 3, 2, 1))
    assert f_inf_min(EigenOperator("hessian_quotient", 2, 2, 1), [3.0, 1.0]) == pytest.approx(1.0)


def test_n_minus_one_transform():
    np.testing.assert_allclose(n_minus_one_transform([1.0, 2.0, 3.0]), [2.5, 2.0, 1.5])
    np.testing.assert_allclose(n_minus_one_transform([1.0, 1.0], shift=0.5), [1.5, 1.5])


def test_matrix_derivatives_distinct():
    md = matrix_derivatives(log_hessian(2, 1), (3, 1))
    np.testing.assert_allclose(md.diagonal, [0.25, 0.25])
    np.testing.assert_allclose(md.pair, np.zeros((2, 2)), atol=1e-15)

    md = matrix_derivatives(EigenOperator("monge_ampere", 2), (3, 1))
    np.testing.assert_allclose(md.diagonal, [1 / 3, 1.0])
    assert md.pair[0, 1] == pytest.approx(-1 / 3)


def test_matrix_derivatives_tie_limit():
    op = EigenOperator("monge_ampere", 2)
    md = matrix_derivatives(op, (2, 2))
    assert md.pair[0, 1] == pytest.approx(-0.25)
    delta = 1e-4
    near = matrix_derivatives(op, (2 + delta, 2 - delta))
    assert near.pair[0, 1] == pytest.approx(-0.25, rel=1e-6)


def test_matrix_derivatives_unsorted():
    with pytest.raises(DomainError):
        matrix_derivatives(EigenOperator("monge_ampere", 2), (1, 3))
