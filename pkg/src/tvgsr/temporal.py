"""Fractional-order temporal difference matrices (Grünwald-Letnikov)."""

from dataclasses import dataclass

import numpy as np

DEFAULT_FRACTIONAL_K = 3


def gl_coefficients(theta, k):
    """Signed generalized binomial coefficients ``C(0..k)`` of order ``theta``.

    ``C(i) = (-1)^i Gamma(theta+1) / (Gamma(i+1) Gamma(theta+1-i))``, computed
    by the recurrence ``C(i) = C(i-1) * (i-1-theta) / i`` so poles of the Gamma
    ratio simply produce zeros.

    >>> gl_coefficients(2, 2)
    array([ 1., -2.,  1.])
    """
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    k = int(k)
    if k < 0:
        raise ValueError("k must be nonnegative")
    c = np.empty(k + 1)
    c[0] = 1.0
    for i in range(1, k + 1):
        c[i] = c[i - 1] * (i - 1 - theta) / i
    return c


def default_band(theta, k=None):
    """Band width for order ``theta``: ``theta`` itself when integral, else ``k`` or 3."""
    if k is not None:
        return int(k)
    if float(theta).is_integer():
        return int(theta)
    return DEFAULT_FRACTIONAL_K


@dataclass(frozen=True)
class FractionalDifference:
    m: int
    theta: float
    k: int
    coefficients: np.ndarray
    matrix: np.ndarray


def toeplitz_lower(m, coeffs):
    """``m x m`` lower-triangular Toeplitz matrix with first column ``coeffs`` (zero padded)."""
    D = np.zeros((m, m))
    for i, c in enumerate(coeffs[:m]):
        D += c * np.eye(m, k=-i)
    return D


def build_difference_matrix(m, theta, k=None):
    """Zero-boundary forward difference matrix ``D_theta`` of size ``m x m``.

    Entry ``(t, j)`` is ``C(t - j)`` for ``0 <= t - j <= k``.  Right
    multiplication ``X @ D`` gives column ``j = sum_i C(i) x_{j+i}``.
    """
    m = int(m)
    k = default_band(theta, k)
    if m < 2:
        raise ValueError("m must be >= 2")
    if m <= k:
        raise ValueError(f"m={m} must exceed the band width k={k}")
    coeffs = gl_coefficients(theta, k)
    return FractionalDifference(m=m, theta=float(theta), k=k, coefficients=coeffs,
                                matrix=toeplitz_lower(m, coeffs))


def temporal_laplacian(m, tau):
    """``D_tau D_tau^T`` for integer order ``tau >= 1``."""
    tau = int(tau)
    if tau < 1:
        raise ValueError("tau must be a positive integer")
    D = build_difference_matrix(m, tau, tau).matrix
    return D @ D.T
