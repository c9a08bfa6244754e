"""Dimensionality reduction: PCA, SVD, LDA, exact t-SNE and imported embeddings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from . import _accel
from .datamodel import Dataset, atomic_write_text, read_tmx, write_tmx

LINEAR_METHODS = ("pca", "svd", "lda")
METHODS = LINEAR_METHODS + ("tsne", "external")


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    method: str
    components: np.ndarray  # out_dim x raw_dim, orthonormal rows
    center: np.ndarray
    explained_variance_ratio: np.ndarray
    target_unreached: bool = False

    @property
    def out_dim(self) -> int:
        return self.components.shape[0]

    @property
    def raw_dim(self) -> int:
        return self.components.shape[1]


@dataclass(frozen=True, eq=False)
class EmbeddedSet:
    matrix: np.ndarray
    method: str = "external"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise EmbeddingError("embedding must be a 2-D matrix")
        if not np.all(np.isfinite(m)):
            raise EmbeddingError("embedding contains non-finite values")
        object.__setattr__(self, "matrix", m)

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[1]

    def take(self, rows) -> "EmbeddedSet":
        return EmbeddedSet(self.matrix[rows], self.method, self.info)


def _normalize_signs(components):
    out = components.copy()
    for i, row in enumerate(out):
        if row[np.argmax(np.abs(row))] < 0:
            out[i] = -row
    return out


def _n_to_keep(ratio, target):
    cum = np.cumsum(ratio)
    if cum[-1] < target:
        return len(ratio), True
    return int(np.searchsorted(cum, target, side="left")) + 1, False


def fit_linear(dataset: Dataset, method="pca", variance_target=0.90) -> EmbeddingModel:
    """Fit a linear projection keeping the fewest components reaching ``variance_target``.

    PCA and SVD are fit on all rows (train, valid and test together); SVD
    factorizes the raw matrix without centering. LDA uses training rows and
    labels only, and its discriminant directions are orthonormalized.
    """
    if method not in LINEAR_METHODS:
        raise EmbeddingError(f"unknown linear method {method!r}")
    X = np.asarray(dataset.features, dtype=np.float64)
    if X.shape[0] < 2:
        raise EmbeddingError("need at least 2 rows")
    if method == "lda":
        return _fit_lda(dataset, variance_target)

    center = X.mean(axis=0) if method == "pca" else np.zeros(X.shape[1])
    _, s, vt = np.linalg.svd(X - center, full_matrices=False)
    power = s ** 2
    tol = power[0] * max(X.shape) * np.finfo(float).eps if len(power) else 0.0
    nonzero = power > tol
    if not np.any(nonzero):
        raise EmbeddingError("data has no variance")
    ratio = power / power.sum()
    m, unreached = _n_to_keep(ratio[nonzero], variance_target)
    return EmbeddingModel(
        method=method,
        components=_normalize_signs(vt[:m]),
        center=center,
        explained_variance_ratio=ratio[:m],
        target_unreached=unreached,
    )


def _fit_lda(dataset: Dataset, variance_target):
    if dataset.task != "classification":
        raise EmbeddingError("lda requires categorical labels")
    train = dataset.rows("train")
    X = np.asarray(dataset.features[train], dtype=np.float64)
    y = np.asarray(dataset.labels[train])
    classes = np.unique(y)
    if len(classes) < 2:
        raise EmbeddingError("lda requires at least 2 classes in the training split")
    mean = X.mean(axis=0)
    d = X.shape[1]
    Sw = np.zeros((d, d))
    Sb = np.zeros((d, d))
    for c in classes:
        Xc = X[y == c]
        mc = Xc.mean(axis=0)
        D = Xc - mc
        Sw += D.T @ D
        diff = (mc - mean)[:, None]
        Sb += len(Xc) * (diff @ diff.T)
    # small ridge keeps Sw invertible when d >= n
    ridge = 1e-6 * (np.trace(Sw) / d if np.trace(Sw) > 0 else 1.0)
    evals, evecs = scipy.linalg.eigh(Sb, Sw + ridge * np.eye(d))
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    n_disc = min(len(classes) - 1, d)
    evals, evecs = np.clip(evals[:n_disc], 0.0, None), evecs[:, :n_disc]
    keep = evals > evals[0] * 1e-12 if evals[0] > 0 else np.zeros(len(evals), bool)
    if not np.any(keep):
        raise EmbeddingError("classes are not separable along any direction")
    evals, evecs = evals[keep], evecs[:, keep]
    ratio = evals / evals.sum()
    m, unreached = _n_to_keep(ratio, variance_target)
    q, _ = np.linalg.qr(evecs[:, :m])
    return EmbeddingModel(
        method="lda",
        components=_normalize_signs(q.T),
        center=mean,
        explained_variance_ratio=ratio[:m],
        target_unreached=unreached,
    )


def transform(model: EmbeddingModel, rows) -> EmbeddedSet:
    if model.method not in LINEAR_METHODS:
        raise EmbeddingError(f"{model.method} has no out-of-sample transform")
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.raw_dim:
        raise EmbeddingError(
            f"dimension mismatch: model expects {model.raw_dim} columns, got {rows.shape}"
        )
    return EmbeddedSet((rows - model.center) @ model.components.T, method=model.method)


# ---------------------------------------------------------------------------
# exact t-SNE
# ---------------------------------------------------------------------------

def _conditional_p(X, perplexity, tol=1e-5, max_iter=200):
    """Row-conditional affinities via per-row binary search on the precision."""
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    D = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        d = np.delete(D[i], i)
        beta, lo, hi = 1.0, -np.inf, np.inf
        for _ in range(max_iter):
            p = np.exp(-(d - d.min()) * beta)
            s = p.sum()
            H = np.log(s) + beta * np.sum(d * p) / s - beta * d.min()
            if abs(H - target) < tol:
                break
            if H > target:
                lo = beta
                beta = beta * 2 if hi == np.inf else (beta + hi) / 2
            else:
                hi = beta
                beta = beta / 2 if lo == -np.inf else (beta + lo) / 2
        P[i, np.arange(n) != i] = p / s
    return P


def joint_probabilities(X, perplexity):
    P = _conditional_p(np.asarray(X, dtype=np.float64), perplexity)
    P = (P + P.T) / (2.0 * P.shape[0])
    np.fill_diagonal(P, 0.0)
    return P


def fit_tsne(data, out_dim=2, perplexity=30.0, iterations=1000, seed=0,
             learning_rate=200.0, exaggeration=12.0, exaggeration_iters=250) -> EmbeddedSet:
    """Exact (O(n^2)) t-SNE of all rows of ``data`` (a Dataset or matrix)."""
    X = data.features if isinstance(data, Dataset) else data
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if out_dim not in (2, 3):
        raise EmbeddingError("t-SNE output dimension must be 2 or 3")
    if perplexity <= 1 or n < 3 * perplexity:
        raise EmbeddingError(f"perplexity {perplexity} infeasible for {n} rows (need rows >= 3*perplexity)")

    rng = np.random.default_rng(seed)
    P = np.maximum(joint_probabilities(X, perplexity), 0.0)
    Y = rng.normal(0.0, 1e-4, size=(n, out_dim))
    _, kl_initial = _accel.tsne_gradient(Y, P)
    step = np.zeros_like(Y)
    gains = np.ones_like(Y)
    for it in range(iterations):
        exag = exaggeration if it < exaggeration_iters else 1.0
        momentum = 0.5 if it < exaggeration_iters else 0.8
        grad, _ = _accel.tsne_gradient(Y, P * exag, compute_kl=False)
        same = (grad > 0) == (step > 0)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        step = momentum * step - learning_rate * gains * grad
        Y = Y + step
        Y = Y - Y.mean(axis=0)
    _, kl_final = _accel.tsne_gradient(Y, P)
    return EmbeddedSet(Y, method="tsne", info={"kl_initial": kl_initial, "kl_final": kl_final})


# ---------------------------------------------------------------------------
# persistence and import
# ---------------------------------------------------------------------------

def import_embedding(path, dataset: Dataset) -> EmbeddedSet:
    m = read_tmx(path)
    if m.shape[0] != dataset.n_rows:
        raise EmbeddingError(f"row mismatch: embedding has {m.shape[0]} rows, dataset {dataset.n_rows}")
    return EmbeddedSet(m, method="external")


def export_embedding(path, embedded: EmbeddedSet) -> None:
    write_tmx(path, embedded.matrix)


def save_model(model: EmbeddingModel, directory) -> Path:
    directory = Path(directory)
    write_tmx(directory / "components.tmx", model.components)
    write_tmx(directory / "center.tmx", model.center[None, :])
    write_tmx(directory / "explained_variance_ratio.tmx", model.explained_variance_ratio[None, :])
    meta = {
        "method": model.method,
        "out_dim": model.out_dim,
        "components": "components.tmx",
        "center": "center.tmx",
        "explained_variance_ratio": "explained_variance_ratio.tmx",
        "target_unreached": model.target_unreached,
    }
    path = directory / "embedding.json"
    atomic_write_text(path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def load_model(manifest_path) -> EmbeddingModel:
    manifest_path = Path(manifest_path)
    meta = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    return EmbeddingModel(
        method=meta["method"],
        components=read_tmx(base / meta["components"]),
        center=read_tmx(base / meta["center"])[0],
        explained_variance_ratio=read_tmx(base / meta["explained_variance_ratio"])[0],
        target_unreached=meta.get("target_unreached", False),
    )


def embed(dataset: Dataset, spec: dict, seed=0):
    """Embed every dataset row according to ``spec`` (``{"method": ..., **params}``).

    Returns ``(EmbeddedSet, EmbeddingModel or None)``.
    """
    params = dict(spec)
    method = params.pop("method")
    if method in LINEAR_METHODS:
        model = fit_linear(dataset, method, **params)
        return transform(model, dataset.features), model
    if method == "tsne":
        return fit_tsne(dataset, seed=seed, **params), None
    if method == "external":
        return import_embedding(params["path"], dataset), None
    raise EmbeddingError(f"unknown embedding method {method!r}")
