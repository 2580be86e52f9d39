import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tvgsr import _accel
from tvgsr.temporal import gl_coefficients, toeplitz_lower

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")

shapes = st.tuples(st.integers(1, 12), st.integers(1, 15))


@given(shapes, st.floats(0.1, 3.0), st.integers(0, 5), st.integers(0, 10_000))
def test_band_right_twins(shape, theta, k, seed):
    X = np.random.default_rng(seed).standard_normal(shape)
    c = gl_coefficients(theta, k)
    D = toeplitz_lower(shape[1], c)
    np.testing.assert_allclose(_accel.band_right_np(X, c), X @ D, atol=1e-12)
    np.testing.assert_allclose(_accel.band_right_nb(X, c), X @ D, atol=1e-12)
    np.testing.assert_allclose(_accel.band_right_t_np(X, c), X @ D.T, atol=1e-12)
    np.testing.assert_allclose(_accel.band_right_t_nb(X, c), X @ D.T, atol=1e-12)


@given(shapes, st.floats(0, 3), st.integers(0, 10_000))
def test_shrink_twins(shape, xi, seed):
    X = np.random.default_rng(seed).standard_normal(shape) * 2
    np.testing.assert_array_equal(_accel.shrink_np(X, xi), _accel.shrink_nb(X, xi))


@given(st.integers(1, 6), st.integers(2, 8), st.integers(0, 3), st.integers(0, 10_000))
def test_assemble_banded_twins(n, m, b, seed):
    b = min(b, m - 1)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    Ls = A + A.T
    T = np.zeros((m, m))
    for i in range(b + 1):
        T += rng.standard_normal() * (np.eye(m, k=i) + np.eye(m, k=-i))
    G = T.copy() * 0.5
    d = rng.random(n * m)
    ab_np = _accel.assemble_banded_np(Ls, T, G, d, b)
    ab_nb = _accel.assemble_banded_nb(Ls, T, G, d, b)
    np.testing.assert_array_equal(ab_np, ab_nb)
    # unpack the upper banded storage and compare with the dense Kronecker matrix
    S = np.kron(T, Ls) + np.kron(G, np.eye(n)) + np.diag(d)
    u = n * (b + 1) - 1
    N = n * m
    for j in range(N):
        for i in range(max(0, j - u), j + 1):
            assert ab_np[u + i - j, j] == pytest.approx(S[i, j], abs=1e-12)


def test_env_flag_selects_numpy_backend():
    code = "from tvgsr._accel import backend; print(backend())"
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, TVGSR_DISABLE_NUMBA=flag)
        out[flag] = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                   text=True, check=True).stdout.strip()
    assert out == {"0": "numba", "1": "numpy"}


def test_flag_parsing():
    assert not _accel._flag_disabled("")
    assert not _accel._flag_disabled("0")
    assert not _accel._flag_disabled("false")
    assert _accel._flag_disabled("1")
    assert _accel._flag_disabled("yes")
