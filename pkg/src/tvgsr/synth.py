"""Synthetic smooth, low-rank time-varying graph signals with masks and noise."""

from dataclasses import dataclass

import numpy as np

from tvgsr.graph import LaplacianSpec, build_knn_graph, laplacian, pseudo_inverse_sqrt

NOISE_KINDS = ("none", "gaussian", "laplace")

# independent RNG streams derived from one seed
_MASK_STREAM = 0
_NOISE_STREAM = 1
_SIGNAL_STREAM = 2
_COORD_STREAM = 3


@dataclass(frozen=True)
class NoiseSpec:
    """``gaussian`` takes the standard deviation, ``laplace`` the scale ``b``."""

    kind: str = "none"
    scale: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.scale < 0:
            raise ValueError("noise scale must be nonnegative")

    @classmethod
    def parse(cls, text):
        """Parse ``"none"``, ``"gaussian:0.1"`` or ``"laplace:0.5"``."""
        if isinstance(text, NoiseSpec):
            return text
        text = str(text).strip().lower()
        if text in ("", "none"):
            return cls()
        kind, _, value = text.partition(":")
        if not value:
            raise ValueError(f"noise spec {text!r} needs a scale, e.g. gaussian:0.1")
        return cls(kind, float(value))

    @property
    def param(self):
        return self.scale if self.kind != "none" else 0.0

    def __str__(self):
        return "none" if self.kind == "none" else f"{self.kind}:{self.scale:g}"


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 100
    T: int = 10
    kappa: float = 1.0
    knn_k: int = 5
    area: float = 100.0
    noise: NoiseSpec = NoiseSpec("gaussian", 0.1)
    repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.T < 1 or self.n < 2:
            raise ValueError("need T >= 1 and n >= 2")
        if self.repeats < 0:
            raise ValueError("repeats must be >= 0")


def rng_for(seed, stream):
    return np.random.default_rng([int(seed), stream])


def random_coords(spec):
    return rng_for(spec.seed, _COORD_STREAM).uniform(0.0, spec.area, size=(spec.n, 2))


def synthetic_graph(spec):
    """Uniform points in the square, kNN with inverse-square-distance weights."""
    return build_knn_graph(random_coords(spec), spec.knn_k, "inverse_square_distance")


def generate_signal(spec, graph):
    """Random walk ``x_t = x_{t-1} + L^{-1/2} f_t`` with ``||f_t|| = kappa``.

    ``x_1`` is standard normal.  With ``repeats > 0`` the columns
    ``x_1..x_T, x_T..x_1`` are tiled ``repeats`` times, so the rank is at
    most ``T``; ``repeats = 0`` returns the plain ``n x T`` sequence.
    """
    rng = rng_for(spec.seed, _SIGNAL_STREAM)
    L = laplacian(graph, LaplacianSpec("combinatorial"))
    L_isqrt = pseudo_inverse_sqrt(L)
    n = graph.n
    cols = [rng.standard_normal(n)]
    for _ in range(1, spec.T):
        f = rng.standard_normal(n)
        f *= spec.kappa / np.linalg.norm(f)
        cols.append(cols[-1] + L_isqrt @ f)
    walk = np.column_stack(cols)
    if spec.repeats == 0:
        return walk
    block = np.hstack([walk, walk[:, ::-1]])
    return np.tile(block, (1, spec.repeats))


def make_synthetic(spec):
    """``(graph, X)`` for ``spec``."""
    graph = synthetic_graph(spec)
    return graph, generate_signal(spec, graph)


def sample_mask(n, m, rate, seed, universe=None):
    """Exactly ``floor(rate * N)`` ones placed uniformly at random.

    ``N`` is ``n * m``, or the number of ``True`` entries in ``universe``
    when given (entries outside it are never sampled).
    """
    if not 0 < rate <= 1:
        raise ValueError(f"sampling rate must be in (0, 1], got {rate}")
    if universe is None:
        flat = np.arange(n * m)
    else:
        universe = np.asarray(universe, dtype=bool)
        if universe.shape != (n, m):
            raise ValueError("universe shape mismatch")
        flat = np.flatnonzero(universe)
    count = int(np.floor(rate * flat.size + 1e-9))
    rng = rng_for(seed, _MASK_STREAM)
    picked = rng.choice(flat, size=count, replace=False) if count < flat.size else flat
    mask = np.zeros(n * m)
    mask[picked] = 1.0
    return mask.reshape(n, m)


def add_noise(X, noise, seed):
    """Return ``X`` plus i.i.d. Gaussian or Laplace noise."""
    noise = NoiseSpec.parse(noise)
    X = np.asarray(X, dtype=float)
    if noise.kind == "none" or noise.scale == 0:
        return X.copy()
    rng = rng_for(seed, _NOISE_STREAM)
    if noise.kind == "gaussian":
        return X + rng.normal(0.0, noise.scale, size=X.shape)
    return X + rng.laplace(0.0, noise.scale, size=X.shape)
