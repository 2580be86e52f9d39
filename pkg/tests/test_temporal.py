import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tvgsr.temporal import (
    build_difference_matrix,
    default_band,
    gl_coefficients,
    temporal_laplacian,
    toeplitz_lower,
)


def gamma_oracle(theta, i):
    """Signed generalized binomial via high-precision Gamma (limit form at poles)."""
    with mpmath.workdps(50):
        val = (-1) ** i * mpmath.binomial(mpmath.mpf(theta), i)
    return float(val)


def test_first_order():
    np.testing.assert_array_equal(gl_coefficients(1, 1), [1.0, -1.0])


def test_second_order():
    np.testing.assert_array_equal(gl_coefficients(2, 2), [1.0, -2.0, 1.0])


def test_fractional_order():
    np.testing.assert_allclose(gl_coefficients(1.8, 3), [1, -1.8, 0.72, 0.048], rtol=1e-14)


@pytest.mark.parametrize("theta", [0.5, 1.3, 1.8, 2.7])
def test_recurrence_matches_gamma_oracle(theta):
    c = gl_coefficients(theta, 6)
    with mpmath.workdps(50):
        g = [(-1) ** i * mpmath.gamma(theta + 1) / (mpmath.gamma(i + 1) * mpmath.gamma(theta + 1 - i))
             for i in range(7)]
    np.testing.assert_allclose(c, [float(v) for v in g], atol=1e-12, rtol=0)


@given(st.integers(1, 6), st.integers(0, 6))
def test_integer_order_truncates(p, extra):
    c = gl_coefficients(p, p + extra)
    assert np.all(np.abs(c[p + 1:]) <= 1e-12)
    np.testing.assert_allclose(c, [gamma_oracle(p, i) for i in range(p + extra + 1)], atol=1e-12)


def test_default_band():
    assert default_band(1) == 1 and default_band(2.0) == 2
    assert default_band(1.8) == 3 and default_band(1.8, 5) == 5


def test_difference_matrix_first_order():
    D = build_difference_matrix(3, 1, 1).matrix
    np.testing.assert_array_equal(D, [[1, 0, 0], [-1, 1, 0], [0, -1, 1]])


def test_difference_matrix_second_order():
    fd = build_difference_matrix(4, 2, 2)
    np.testing.assert_array_equal(fd.matrix[:, 0], [1, -2, 1, 0])
    for t in range(4):
        for j in range(4):
            expected = fd.coefficients[t - j] if 0 <= t - j <= 2 else 0.0
            assert fd.matrix[t, j] == expected


def test_difference_matrix_large_band_structure():
    fd = build_difference_matrix(200, 1.8, 3)
    D = fd.matrix
    assert D.shape == (200, 200)
    assert np.all(np.triu(D, 1) == 0)
    for i in range(4):
        np.testing.assert_array_equal(np.diag(D, -i), np.full(200 - i, fd.coefficients[i]))
    assert np.all(np.tril(D, -4) == 0)


def test_difference_matrix_errors():
    with pytest.raises(ValueError):
        build_difference_matrix(3, 1.8, 3)
    with pytest.raises(ValueError):
        build_difference_matrix(1, 1, 1)


def test_right_multiplication_layout():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((3, 8))
    fd = build_difference_matrix(8, 1.8, 3)
    XD = X @ fd.matrix
    for j in range(8):
        expected = sum(fd.coefficients[i] * X[:, j + i] for i in range(4) if j + i < 8)
        np.testing.assert_allclose(XD[:, j], expected, atol=1e-14)


def test_constant_signal_first_difference():
    X = np.full((4, 6), 2.5)
    XD = X @ build_difference_matrix(6, 1).matrix
    np.testing.assert_allclose(XD[:, :-1], 0, atol=1e-15)
    assert np.all(XD[:, -1] != 0)


def test_temporal_laplacian_small():
    np.testing.assert_array_equal(temporal_laplacian(3, 1), [[1, -1, 0], [-1, 2, -1], [0, -1, 2]])


@given(st.integers(3, 30), st.integers(1, 2), st.integers(0, 1000))
def test_temporal_laplacian_trace_identity(m, tau, seed):
    X = np.random.default_rng(seed).standard_normal((5, m))
    Lt = temporal_laplacian(m, tau)
    D = build_difference_matrix(m, tau, tau).matrix
    lhs = np.trace(X @ Lt @ X.T)
    assert lhs == pytest.approx(np.linalg.norm(X @ D) ** 2, rel=1e-10, abs=1e-10)
    np.testing.assert_allclose(Lt, Lt.T)
    assert np.linalg.eigvalsh(Lt)[0] > -1e-10


@given(st.floats(0.1, 3.0), st.integers(0, 1000))
def test_frobenius_trace_identity(theta, seed):
    X = np.random.default_rng(seed).standard_normal((5, 4))
    D = build_difference_matrix(4, theta, 3).matrix
    a = np.linalg.norm(X @ D) ** 2
    b = np.trace(D.T @ X.T @ X @ D)
    assert a == pytest.approx(b, rel=1e-10)


def test_toeplitz_truncates_long_coefficients():
    np.testing.assert_array_equal(toeplitz_lower(2, [1.0, 2.0, 3.0]), [[1, 0], [2, 1]])
