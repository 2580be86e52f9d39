"""ERF-weighted nuclear norm and weighted singular value thresholding."""

import numpy as np
from scipy.special import erf

from tvgsr._accel import shrink_kernel

SQRT_PI = np.sqrt(np.pi)


def singular_values(X):
    return np.linalg.svd(np.asarray(X, dtype=float), compute_uv=False)


def erf_integral(s, sigma):
    """``int_0^s exp(-t^2 / sigma^2) dt`` evaluated in closed form."""
    return 0.5 * sigma * SQRT_PI * erf(np.asarray(s, dtype=float) / sigma)


def erf_norm(X, sigma, spectrum=None):
    """Sum over singular values of ``int_0^{s_i} exp(-t^2/sigma^2) dt``.

    Pass ``spectrum`` to reuse singular values that are already known.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    s = singular_values(X) if spectrum is None else np.asarray(spectrum, dtype=float)
    return float(np.sum(erf_integral(s, sigma)))


def nuclear_norm(X):
    return float(np.sum(singular_values(X)))


def erf_weights(spectrum, sigma):
    """``w_i = exp(-s_i^2 / sigma^2)``; non-decreasing for a sorted spectrum."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    s = np.asarray(spectrum, dtype=float)
    return np.exp(-(s / sigma) ** 2)


def shrink(x, xi):
    """Soft threshold ``sign(x) * max(|x| - xi, 0)``, entrywise."""
    if xi < 0:
        raise ValueError("threshold must be nonnegative")
    if np.ndim(x) == 0:
        return float(np.sign(x) * max(abs(x) - xi, 0.0))
    return shrink_kernel(x, xi)


def weighted_svt_full(M, thresholds):
    """Weighted SVT returning ``(Z, shrunk singular values)``."""
    M = np.asarray(M, dtype=float)
    t = np.asarray(thresholds, dtype=float)
    p = min(M.shape)
    if t.ndim == 0:
        t = np.full(p, float(t))
    if t.shape != (p,):
        raise ValueError(f"need {p} thresholds, got {t.shape}")
    if np.any(t < 0):
        raise ValueError("thresholds must be nonnegative")
    if np.any(np.diff(t) < -1e-12 * max(1.0, float(t.max(initial=0.0)))):
        raise ValueError("thresholds must be non-decreasing for the closed form to hold")
    if not np.any(t):
        # nothing to shrink; skip the SVD round-trip so M comes back exactly
        return M.copy(), singular_values(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s_new = np.maximum(s - t, 0.0)
    keep = s_new > 0
    Z = (U[:, keep] * s_new[keep]) @ Vt[keep]
    return Z, s_new


def weighted_svt(M, thresholds):
    """Shrink the ``i``-th singular value of ``M`` by ``thresholds[i]``.

    This is the exact minimizer of ``sum_i t_i sigma_i(Z) + 1/2 ||M - Z||_F^2``
    when the thresholds are non-decreasing; a decreasing vector is rejected.
    """
    return weighted_svt_full(M, thresholds)[0]
