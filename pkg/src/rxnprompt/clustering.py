"""Seeded k-means over composed embeddings and the 2-D report projection."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin

from .embedding import EncodingMethod, encoding_from_tag
from .errors import ConfigError, DataError
from .validation import as_float_matrix


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, points x centers.

    Uses |x|^2 - 2 x.c + |c|^2 so the heavy part is one matmul; tiny
    negative residues from cancellation are clamped to zero.
    """
    p2 = np.einsum("ij,ij->i", points, points)[:, None]
    c2 = np.einsum("ij,ij->i", centers, centers)[None, :]
    dist = p2 - 2.0 * (points @ centers.T) + c2
    np.maximum(dist, 0.0, out=dist)
    return dist


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++: several D^2-sampled candidates per step, keeping
    the one that most reduces the total potential."""
    n = points.shape[0]
    n_trials = 2 + int(np.log(k)) if k > 1 else 1
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = points[first]
    closest = np.einsum("ij,ij->i", points - centers[0], points - centers[0])
    for c in range(1, k):
        total = float(closest.sum())
        if total <= 0.0:
            # All remaining points coincide with a chosen center.
            candidates = rng.integers(n, size=1)
        else:
            candidates = rng.choice(n, size=n_trials, p=closest / total)
        best_idx = None
        best_closest = None
        best_total = np.inf
        for idx in candidates:
            dist = np.einsum(
                "ij,ij->i", points - points[int(idx)], points - points[int(idx)]
            )
            new_closest = np.minimum(closest, dist)
            new_total = float(new_closest.sum())
            if new_total < best_total:
                best_total = new_total
                best_idx = int(idx)
                best_closest = new_closest
        centers[c] = points[best_idx]
        closest = best_closest
    return centers


class KMeans(ClusterMixin, BaseEstimator):
    """Lloyd's algorithm with seeded k-means++ initialization.

    Deterministic given (point order, n_clusters, seed). Ties in the
    assignment step go to the lowest center index; a cluster that empties
    is re-seeded to the point currently farthest from its own center.
    With n_init > 1 the fit restarts from seeds seed..seed+n_init-1 and
    keeps the lowest-inertia run (still fully deterministic).
    """

    def __init__(
        self,
        n_clusters: int = 8,
        seed: int = 0,
        max_iter: int = 300,
        tol: float = 1e-4,
        n_init: int = 1,
        encoding: EncodingMethod | None = None,
    ):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self.n_init = n_init
        self.encoding = encoding

    def fit(self, X, y=None) -> "KMeans":
        points = as_float_matrix(X, "points")
        best: dict | None = None
        for restart in range(max(1, self.n_init)):
            state = self._fit_once(points, self.seed + restart)
            if best is None or state["inertia"] < best["inertia"]:
                best = state
        self.cluster_centers_ = best["centers"]
        self.labels_ = best["labels"]
        self.inertia_ = best["inertia"]
        self.inertia_history_ = best["history"]
        self.n_iter_ = len(best["history"])
        self.n_features_in_ = points.shape[1]
        return self

    def _fit_once(self, points: np.ndarray, seed: int) -> dict:
        n, dim = points.shape
        k = self.n_clusters
        if k <= 0:
            raise ConfigError(f"n_clusters must be positive, got {k}")
        if n < k:
            raise DataError(f"need at least {k} points for {k} clusters, got {n}")
        rng = np.random.default_rng(seed)
        centers = _kmeanspp_init(points, k, rng)

        history: list[float] = []
        labels = np.zeros(n, dtype=np.int64)
        for iteration in range(self.max_iter):
            dist = _squared_distances(points, centers)
            labels = np.argmin(dist, axis=1)
            # Revive empty clusters from the farthest-from-center points.
            taken: set[int] = set()
            for c in range(k):
                if np.any(labels == c):
                    continue
                assigned = dist[np.arange(n), labels].copy()
                assigned[list(taken)] = -np.inf
                far = int(np.argmax(assigned))
                taken.add(far)
                centers[c] = points[far]
                dist[:, c] = np.einsum(
                    "ij,ij->i", points - centers[c], points - centers[c]
                )
                labels = np.argmin(dist, axis=1)
            history.append(float(dist[np.arange(n), labels].sum()))
            new_centers = centers.copy()
            for c in range(k):
                members = points[labels == c]
                if len(members):
                    new_centers[c] = members.mean(axis=0)
            shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
            centers = new_centers
            if shift < self.tol:
                break

        dist = _squared_distances(points, centers)
        labels = np.argmin(dist, axis=1)
        return {
            "centers": centers,
            "labels": labels,
            "inertia": float(dist[np.arange(n), labels].sum()),
            "history": history,
        }

    def predict(self, X) -> np.ndarray:
        points = as_float_matrix(X, "points")
        if points.shape[1] != self.cluster_centers_.shape[1]:
            raise DataError(
                f"dimension mismatch: points have {points.shape[1]}, "
                f"model has {self.cluster_centers_.shape[1]}"
            )
        return np.argmin(_squared_distances(points, self.cluster_centers_), axis=1)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_


KMNS_MAGIC = b"KMNS"
KMNS_VERSION = 1
_NO_ENCODING_TAG = 255


def save_kmeans(model: KMeans, path: str | Path) -> None:
    """Serialize fitted centers: magic, version, k, dim, encoding tag, seed."""
    centers = np.asarray(model.cluster_centers_, dtype="<f4")
    k, dim = centers.shape
    tag = model.encoding.tag if model.encoding is not None else _NO_ENCODING_TAG
    with Path(path).open("wb") as fh:
        fh.write(KMNS_MAGIC)
        fh.write(struct.pack("<IIIBQ", KMNS_VERSION, k, dim, tag, model.seed))
        fh.write(centers.tobytes())


def load_kmeans(path: str | Path) -> KMeans:
    data = Path(path).read_bytes()
    if data[:4] != KMNS_MAGIC:
        raise DataError(f"{path}: not a KMNS model (bad magic)")
    version, k, dim, tag, seed = struct.unpack_from("<IIIBQ", data, 4)
    if version != KMNS_VERSION:
        raise DataError(f"{path}: unsupported KMNS version {version}")
    header = 4 + struct.calcsize("<IIIBQ")
    floats = np.frombuffer(data, dtype="<f4", count=k * dim, offset=header)
    encoding = None if tag == _NO_ENCODING_TAG else encoding_from_tag(tag)
    model = KMeans(n_clusters=k, seed=seed, encoding=encoding)
    model.cluster_centers_ = floats.reshape(k, dim).astype(np.float64)
    model.n_features_in_ = dim
    return model


class PlanarProjection(TransformerMixin, BaseEstimator):
    """Linear map onto the top-2 principal directions of the fitted data.

    Directions come from seeded power iteration with deflation on the
    mean-centered points; used only for cluster visualization output.
    """

    def __init__(self, seed: int = 0, max_iter: int = 10_000, tol: float = 1e-12):
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol

    def _top_direction(
        self, centered: np.ndarray, rng: np.random.Generator, scale: float
    ) -> np.ndarray:
        dim = centered.shape[1]
        # Treat directions whose variance is numerically zero relative to
        # the data scale as absent (degenerate or fully deflated input).
        if float(np.linalg.norm(centered)) <= 1e-9 * max(scale, 1e-30):
            return np.zeros(dim)
        vec = rng.standard_normal(dim)
        vec /= np.linalg.norm(vec)
        for _ in range(self.max_iter):
            nxt = centered.T @ (centered @ vec)
            norm = float(np.linalg.norm(nxt))
            if norm <= 1e-18 * max(scale, 1e-30) ** 2:
                return np.zeros(dim)
            nxt /= norm
            if float(np.linalg.norm(nxt - vec)) < self.tol or float(
                np.linalg.norm(nxt + vec)
            ) < self.tol:
                vec = nxt
                break
            vec = nxt
        # Deterministic sign: largest-magnitude component positive.
        pivot = int(np.argmax(np.abs(vec)))
        if vec[pivot] < 0:
            vec = -vec
        return vec

    def fit(self, X, y=None) -> "PlanarProjection":
        points = as_float_matrix(X, "points")
        if points.shape[0] < 2:
            raise DataError("need at least 2 points to project")
        self.mean_ = points.mean(axis=0)
        centered = points - self.mean_
        scale = float(np.linalg.norm(centered))
        rng = np.random.default_rng(self.seed)
        first = self._top_direction(centered, rng, scale)
        deflated = centered - np.outer(centered @ first, first)
        second = self._top_direction(deflated, rng, scale)
        self.components_ = np.stack([first, second])
        return self

    def transform(self, X) -> np.ndarray:
        points = as_float_matrix(X, "points")
        return (points - self.mean_) @ self.components_.T


def project_2d(points, seed: int = 0) -> np.ndarray:
    """One-shot top-2 projection of a point set (all zeros if degenerate)."""
    return PlanarProjection(seed=seed).fit_transform(points)
