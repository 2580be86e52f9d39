"""Hot inner loops, each with a numba kernel and a pure-numpy twin.

The numba path is used when numba imports cleanly and the environment
variable ``TVGSR_DISABLE_NUMBA`` is unset (or ``0``/``false``).  Both twins
are always importable so tests and ``benchmarks/bench_kernels.py`` can pit
them against each other.
"""

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _flag_disabled(value):
    return value.strip().lower() not in ("", "0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and not _flag_disabled(os.environ.get("TVGSR_DISABLE_NUMBA", ""))


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# --------------------------------------------------------------------------
# X @ D and X @ D.T for a lower-triangular banded Toeplitz D with first
# column coeffs[0..k]


def band_right_np(X, coeffs):
    m = X.shape[1]
    out = np.zeros_like(X)
    for i, c in enumerate(coeffs):
        if i >= m:
            break
        # column j picks up c_i * x_{j+i}
        out[:, : m - i] += c * X[:, i:]
    return out


def band_right_t_np(X, coeffs):
    m = X.shape[1]
    out = np.zeros_like(X)
    for i, c in enumerate(coeffs):
        if i >= m:
            break
        out[:, i:] += c * X[:, : m - i]
    return out


@_njit
def band_right_nb(X, coeffs):
    n, m = X.shape
    k = coeffs.shape[0]
    out = np.zeros((n, m))
    for r in range(n):
        for j in range(m):
            acc = 0.0
            for i in range(k):
                if j + i >= m:
                    break
                acc += coeffs[i] * X[r, j + i]
            out[r, j] = acc
    return out


@_njit
def band_right_t_nb(X, coeffs):
    n, m = X.shape
    k = coeffs.shape[0]
    out = np.zeros((n, m))
    for r in range(n):
        for j in range(m):
            acc = 0.0
            for i in range(k):
                if j - i < 0:
                    break
                acc += coeffs[i] * X[r, j - i]
            out[r, j] = acc
    return out


# --------------------------------------------------------------------------
# entrywise soft threshold


def shrink_np(x, xi):
    return np.sign(x) * np.maximum(np.abs(x) - xi, 0.0)


@_njit
def _shrink_flat_nb(x, xi, out):
    for i in range(x.shape[0]):
        v = x[i]
        a = abs(v) - xi
        if a <= 0.0:
            out[i] = 0.0
        elif v > 0.0:
            out[i] = a
        else:
            out[i] = -a


def shrink_nb(x, xi):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    _shrink_flat_nb(arr.reshape(-1), float(xi), out.reshape(-1))
    return out


# --------------------------------------------------------------------------
# Upper banded (LAPACK "U") storage of
#     S = kron(Tc, Ls) + kron(Tg, I_n) + diag(d)
# with Tc, Tg symmetric m x m of half-bandwidth b and vec() column-major, so
# entry (i, t) of an n x m matrix sits at index t * n + i.  The upper
# bandwidth is u = n * (b + 1) - 1; ab has shape (u + 1, n * m).


def assemble_banded_np(Ls, Tc, Tg, d, b):
    n = Ls.shape[0]
    m = Tc.shape[0]
    u = n * (b + 1) - 1
    ab = np.zeros((u + 1, n * m))
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    eye = np.eye(n)
    upper = ii <= jj
    for s in range(m):
        for t in range(max(0, s - b), s + 1):
            block = Tc[t, s] * Ls + Tg[t, s] * eye
            rows = u + (t - s) * n + ii - jj
            cols = s * n + jj
            if t == s:
                ab[rows[upper], cols[upper]] = block[upper]
            else:
                ab[rows, cols] = block
    ab[u] += d
    return ab


@_njit
def assemble_banded_nb(Ls, Tc, Tg, d, b):
    n = Ls.shape[0]
    m = Tc.shape[0]
    u = n * (b + 1) - 1
    ab = np.zeros((u + 1, n * m))
    for s in range(m):
        t0 = s - b
        if t0 < 0:
            t0 = 0
        for t in range(t0, s + 1):
            c = Tc[t, s]
            g = Tg[t, s]
            off = u + (t - s) * n
            for j in range(n):
                col = s * n + j
                i_end = n if t < s else j + 1
                for i in range(i_end):
                    v = c * Ls[i, j]
                    if i == j:
                        v += g
                    ab[off + i - j, col] = v
    for q in range(n * m):
        ab[u, q] += d[q]
    return ab


if USE_NUMBA:
    band_right = band_right_nb
    band_right_t = band_right_t_nb
    shrink_kernel = shrink_nb
    assemble_banded = assemble_banded_nb
else:
    band_right = band_right_np
    band_right_t = band_right_t_np
    shrink_kernel = shrink_np
    assemble_banded = assemble_banded_np


def backend():
    """Name of the active kernel backend (``"numba"`` or ``"numpy"``)."""
    return "numba" if USE_NUMBA else "numpy"
