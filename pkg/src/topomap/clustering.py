"""K-means and BIRCH partitions of an embedding, plus nearest-centroid assignment."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _accel
from .datamodel import atomic_write_text, read_assignments, read_tmx, write_assignments, write_tmx

MAX_LLOYD_ITERATIONS = 300


class ClusteringError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ClusterModel:
    method: str
    centroids: np.ndarray
    assignments: np.ndarray
    seed: int = 0
    inertia: float = 0.0
    empty: tuple = ()
    inertia_history: tuple = field(default=(), repr=False)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def out_dim(self) -> int:
        return self.centroids.shape[1]


def _as_matrix(E):
    return np.asarray(getattr(E, "matrix", E), dtype=np.float64)


def assign(model: ClusterModel, E) -> np.ndarray:
    """Nearest-centroid cluster ids; ties go to the lowest id."""
    X = _as_matrix(E)
    if X.ndim != 2 or X.shape[1] != model.out_dim:
        raise ClusteringError(f"dimension mismatch: model has {model.out_dim} dims, got {X.shape}")
    labels, _ = _accel.nearest_centroid(X, model.centroids)
    return labels


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # every remaining point duplicates a chosen centre
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[chosen].copy()


def _lloyd(X, centroids, max_iter):
    k = centroids.shape[0]
    history = []
    prev = None
    for _ in range(max_iter):
        labels, dist = _accel.nearest_centroid(X, centroids)
        counts = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # re-seed an empty centroid on the worst-fitted point
            far = int(np.argmax(dist))
            centroids[c] = X[far]
            labels, dist = _accel.nearest_centroid(X, centroids)
        history.append(float(dist.sum()))
        if prev is not None and np.array_equal(labels, prev):
            break
        prev = labels
        for c in range(k):
            members = labels == c
            if members.any():
                centroids[c] = X[members].mean(axis=0)
    else:
        labels, dist = _accel.nearest_centroid(X, centroids)
        history.append(float(dist.sum()))
    return centroids, labels, float(dist.sum()), history


def kmeans_fit(E, k: int, seed: int = 0, restarts: int = 10,
               max_iter: int = MAX_LLOYD_ITERATIONS) -> ClusterModel:
    """Best-of-``restarts`` Lloyd k-means with k-means++ seeding."""
    X = _as_matrix(E)
    n = X.shape[0]
    if k < 1:
        raise ClusteringError("k must be >= 1")
    if k > n:
        raise ClusteringError(f"k={k} exceeds the number of rows ({n})")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        result = _lloyd(X, _kmeanspp(X, k, rng), max_iter)
        if best is None or result[2] < best[2]:
            best = result
    centroids, labels, inertia, history = best
    counts = np.bincount(labels, minlength=k)
    return ClusterModel(
        method="kmeans",
        centroids=centroids,
        assignments=labels,
        seed=seed,
        inertia=inertia,
        empty=tuple(int(c) for c in np.flatnonzero(counts == 0)),
        inertia_history=tuple(history),
    )


def birch_fit(E, k: int, branching: int = 50, threshold=None, seed: int = 0) -> ClusterModel:
    from .birch import birch_fit as _birch_fit

    return _birch_fit(E, k, branching=branching, threshold=threshold, seed=seed)


def fit(E, spec: dict, seed: int = 0) -> ClusterModel:
    """Dispatch on ``spec["method"]``; remaining keys are passed through."""
    params = dict(spec)
    method = params.pop("method")
    if params.get("k") is None:
        raise ClusteringError("clustering spec needs a concrete k")
    if method == "kmeans":
        return kmeans_fit(E, seed=seed, **params)
    if method == "birch":
        return birch_fit(E, seed=seed, **params)
    raise ClusteringError(f"unknown clustering method {method!r}")


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_model(model: ClusterModel, directory) -> Path:
    directory = Path(directory)
    write_tmx(directory / "centroids.tmx", model.centroids)
    write_assignments(directory / "assignments.csv", model.assignments)
    meta = {
        "method": model.method,
        "k": model.k,
        "seed": model.seed,
        "inertia": model.inertia,
        "empty": list(model.empty),
        "centroids": "centroids.tmx",
        "assignments": "assignments.csv",
    }
    path = directory / "cluster_model.json"
    atomic_write_text(path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def load_model(manifest_path) -> ClusterModel:
    manifest_path = Path(manifest_path)
    meta = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    return ClusterModel(
        method=meta["method"],
        centroids=read_tmx(base / meta["centroids"]),
        assignments=read_assignments(base / meta["assignments"]),
        seed=meta["seed"],
        inertia=meta["inertia"],
        empty=tuple(meta["empty"]),
    )
