import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renormvol.series import (
    LogSeries,
    LogSquaredError,
    MatrixSeries,
    matrix_series_inverse,
    sqrt_det_ratio,
)

coef_lists = st.lists(st.floats(-2, 2), min_size=5, max_size=5)


def _series(c):
    return LogSeries(np.array(c))


@settings(max_examples=50, deadline=None)
@given(coef_lists, coef_lists)
def test_product_is_commutative_and_truncated(a, b):
    p, q = _series(a), _series(b)
    np.testing.assert_allclose((p * q).a, (q * p).a, atol=1e-14)
    # order-2 coefficient of the product by hand
    assert (p * q).coeff(2) == pytest.approx(a[0] * b[2] + a[1] * b[1] + a[2] * b[0], abs=1e-13)


@settings(max_examples=50, deadline=None)
@given(coef_lists, st.floats(-2.5, 2.5), st.floats(-2.5, 2.5))
def test_pow_laws(a, p, q):
    a = [1.0 + abs(a[0])] + a[1:]
    s = _series(a)
    lhs = s.pow(p) * s.pow(q)
    rhs = s.pow(p + q)
    np.testing.assert_allclose(lhs.a, rhs.a, rtol=1e-10, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(coef_lists)
def test_exp_matches_evaluation(a):
    a = [0.0] + a[1:]
    s = _series(a)
    r = 1e-3
    assert s.exp().evaluate(r) == pytest.approx(np.exp(s.evaluate(r)), rel=1e-11)


def test_log_squared_is_refused():
    s = LogSeries.monomial(1, 4, log=True)
    with pytest.raises(LogSquaredError):
        s * s


def test_euler_operator_on_log_monomial():
    # r d/dr (r^2 log r) = 2 r^2 log r + r^2
    s = LogSeries.monomial(2, 3, log=True)
    e = s.euler()
    assert e.coeff(2) == 1.0
    assert e.coeff(2, log=True) == 2.0


def test_deriv_and_shift():
    s = LogSeries(np.array([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(s.deriv().a, [2.0, 6.0])
    np.testing.assert_array_equal(s.shift(1).a, [0.0, 1.0, 2.0, 3.0])


def test_truncation_cannot_grow():
    with pytest.raises(ValueError):
        LogSeries(np.zeros(3)).truncate(4)


def _random_spd_series(rng, n=3, order=4):
    A = rng.normal(size=(n, n))
    c = [A @ A.T + n * np.eye(n)]
    for _ in range(order):
        B = rng.normal(size=(n, n))
        c.append(B + B.T)
    return MatrixSeries(np.array(c))


def test_matrix_inverse_series():
    m = _random_spd_series(np.random.default_rng(3))
    prod = m @ matrix_series_inverse(m)
    np.testing.assert_allclose(prod.c[0], np.eye(3), atol=1e-13)
    np.testing.assert_allclose(prod.c[1:], 0.0, atol=1e-12)


def test_sqrt_det_ratio_against_evaluation():
    m = _random_spd_series(np.random.default_rng(4))
    s = sqrt_det_ratio(m)
    r = 1e-3
    want = np.sqrt(np.linalg.det(m.evaluate(r)) / np.linalg.det(m.c[0]))
    assert s.evaluate(r) == pytest.approx(want, rel=1e-12)


def test_sqrt_det_ratio_needs_positive_definite():
    m = MatrixSeries(np.array([-np.eye(2), np.eye(2)]))
    with pytest.raises(np.linalg.LinAlgError):
        sqrt_det_ratio(m)
