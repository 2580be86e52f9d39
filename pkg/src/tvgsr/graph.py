"""Spatial kNN graphs, Laplacians and their spectral transforms."""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

EARTH_RADIUS_KM = 6371.0088

WEIGHT_MODES = ("inverse_square_distance", "binary")
LAPLACIAN_KINDS = ("combinatorial", "symmetric_normalized")


@dataclass(frozen=True)
class SpatialGraph:
    """Undirected weighted graph on ``n`` located vertices.

    ``adjacency`` is symmetric with a zero diagonal and ``degree`` holds its
    row sums.
    """

    coords: np.ndarray
    adjacency: np.ndarray
    degree: np.ndarray = field(init=False)

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {A.shape}")
        if np.any(np.diag(A) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if np.max(np.abs(A - A.T), initial=0.0) > 1e-12:
            raise ValueError("adjacency must be symmetric")
        if np.any(A < 0):
            raise ValueError("adjacency must be nonnegative")
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        object.__setattr__(self, "degree", A.sum(axis=1))

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def edges(self):
        """Sorted list of undirected edges ``(i, j)`` with ``i < j``."""
        i, j = np.nonzero(np.triu(self.adjacency))
        return list(zip(i.tolist(), j.tolist()))


@dataclass(frozen=True)
class LaplacianSpec:
    kind: str = "combinatorial"
    sobolev_epsilon: float = 0.0
    sobolev_order: float = 1.0

    def __post_init__(self):
        if self.kind not in LAPLACIAN_KINDS:
            raise ValueError(f"unknown Laplacian kind {self.kind!r}")
        if self.sobolev_epsilon < 0:
            raise ValueError("sobolev_epsilon must be nonnegative")
        if self.sobolev_order < 1:
            raise ValueError("sobolev_order must be >= 1")


def haversine_distances(coords):
    """Great-circle distances in km between ``(lon, lat)`` rows given in degrees."""
    lon, lat = np.radians(coords[:, 0]), np.radians(coords[:, 1])
    dlat = lat[:, None] - lat[None, :]
    dlon = lon[:, None] - lon[None, :]
    h = np.sin(dlat / 2) ** 2 + np.cos(lat)[:, None] * np.cos(lat)[None, :] * np.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def build_knn_graph(coords, k, weight_mode="inverse_square_distance", metric="euclidean"):
    """Connect each vertex to its ``k`` nearest neighbours.

    The edge set is symmetrized by union: ``i ~ j`` if either picks the other.
    Weights are ``1 / d(i, j)**2`` or ``1`` depending on ``weight_mode``.

    Parameters
    ----------
    coords : (n, d) array
    k : int
        Neighbours per vertex, ``1 <= k < n``.
    weight_mode : {"inverse_square_distance", "binary"}
    metric : {"euclidean", "haversine"}
        ``"haversine"`` reads ``coords`` as ``(lon, lat)`` degrees.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2:
        raise ValueError("coords must be an (n, d) array")
    n = coords.shape[0]
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= n:
        raise ValueError(f"k={k} needs at least k+1={k + 1} vertices, got {n}")
    if not np.all(np.isfinite(coords)):
        raise ValueError("coordinates must be finite")
    if weight_mode not in WEIGHT_MODES:
        raise ValueError(f"unknown weight_mode {weight_mode!r}")

    if metric == "euclidean":
        dist = cdist(coords, coords)
    elif metric == "haversine":
        dist = haversine_distances(coords)
    else:
        raise ValueError(f"unknown metric {metric!r}")

    if weight_mode == "inverse_square_distance":
        off = dist[~np.eye(n, dtype=bool)]
        if np.any(off == 0):
            raise ValueError("duplicate coordinates: inverse-square weights are undefined")

    ranked = dist.copy()
    np.fill_diagonal(ranked, np.inf)
    nbrs = np.argsort(ranked, axis=1, kind="stable")[:, :k]

    picked = np.zeros((n, n), dtype=bool)
    picked[np.repeat(np.arange(n), k), nbrs.ravel()] = True
    picked |= picked.T

    if weight_mode == "binary":
        A = picked.astype(float)
    else:
        A = np.zeros((n, n))
        A[picked] = 1.0 / dist[picked] ** 2
    return SpatialGraph(coords=coords, adjacency=A)


def laplacian(graph, spec=None):
    """Graph Laplacian of ``graph``; the Sobolev fields of ``spec`` are ignored.

    Combinatorial ``M - A`` or symmetric normalized
    ``I - M^{-1/2} A M^{-1/2}``.  Isolated vertices get an identity row in
    the normalized form.
    """
    spec = spec or LaplacianSpec()
    A = graph.adjacency
    deg = graph.degree
    if spec.kind == "combinatorial":
        return np.diag(deg) - A
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    L = np.eye(graph.n) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    return 0.5 * (L + L.T)


def _sym_eigh(L):
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, np.max(np.abs(L), initial=0.0))
    if np.max(np.abs(L - L.T), initial=0.0) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    return np.linalg.eigh(0.5 * (L + L.T))


def sobolev_transform(L, epsilon, order, half=False):
    """Return ``(L + epsilon I)^order`` via eigendecomposition.

    With ``half=True`` return the pair ``(full, half_power)`` where
    ``half_power = (L + epsilon I)^(order / 2)``.  Eigenvalues of ``L`` are
    clipped at zero first, so ``epsilon = 0`` is usable for plain ``L``.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if order < 1:
        raise ValueError("order must be >= 1")
    lam, U = _sym_eigh(L)
    shifted = np.clip(lam, 0.0, None) + epsilon
    full = (U * shifted**order) @ U.T
    full = 0.5 * (full + full.T)
    if not half:
        return full
    hp = (U * shifted ** (order / 2)) @ U.T
    return full, 0.5 * (hp + hp.T)


def pseudo_inverse_sqrt(L, rel_tol=1e-10):
    """``U diag(0 or lambda^{-1/2}) U^T``; eigenvalues within ``rel_tol * lambda_max`` count as zero."""
    lam, U = _sym_eigh(L)
    cutoff = rel_tol * max(np.max(np.abs(lam), initial=0.0), np.finfo(float).tiny)
    inv = np.zeros_like(lam)
    keep = np.abs(lam) > cutoff
    inv[keep] = 1.0 / np.sqrt(lam[keep])
    out = (U * inv) @ U.T
    return 0.5 * (out + out.T)


def read_coords_csv(path):
    """Read an ``id,x,y`` (or ``id,lon,lat``) CSV.  Returns ``(ids, coords)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty coordinates file")
    header = [h.strip().lower() for h in rows[0]]
    if header not in (["id", "x", "y"], ["id", "lon", "lat"]):
        raise ValueError(f"{path}: header must be id,x,y or id,lon,lat, got {rows[0]}")
    ids, coords = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        try:
            coords.append((float(row[1]), float(row[2])))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: unparsable coordinate") from exc
        ids.append(row[0].strip())
    return ids, np.array(coords, dtype=float).reshape(-1, 2)


def write_coords_csv(path, coords, ids=None, columns=("x", "y")):
    coords = np.asarray(coords, dtype=float)
    if ids is None:
        ids = [str(i) for i in range(coords.shape[0])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *columns])
        for i, (a, b) in zip(ids, coords):
            w.writerow([i, f"{a:.17g}", f"{b:.17g}"])
