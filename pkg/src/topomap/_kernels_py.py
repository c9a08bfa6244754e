"""Numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them one-to-one.
"""
import numpy as np

_CHUNK = 4096


def nearest_centroid(X, C):
    """Index of the nearest centroid for every row, plus the squared distance.

    Ties go to the lowest centroid index.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    n = X.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    for start in range(0, n, _CHUNK):
        block = X[start:start + _CHUNK]
        diff = block[:, None, :] - C[None, :, :]
        d2 = np.einsum("ikd,ikd->ik", diff, diff)
        # argmin returns the first minimum, i.e. the lowest id on ties
        idx = np.argmin(d2, axis=1)
        labels[start:start + _CHUNK] = idx
        dist[start:start + _CHUNK] = d2[np.arange(len(idx)), idx]
    return labels, dist


def tsne_gradient(Y, P, compute_kl=True):
    """Exact t-SNE gradient and KL(P || Q) for embedding ``Y``.

    ``P`` is the symmetric joint affinity matrix with a zero diagonal. The KL
    term is NaN when ``compute_kl`` is false.
    """
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    sum_y = np.einsum("ij,ij->i", Y, Y)
    d2 = sum_y[:, None] + sum_y[None, :] - 2.0 * (Y @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    num = 1.0 / (1.0 + d2)
    np.fill_diagonal(num, 0.0)
    Z = num.sum()
    Q = np.maximum(num / Z, 1e-300)
    W = (P - Q) * num
    grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
    if not compute_kl:
        return grad, float("nan")
    mask = P > 0
    kl = float(np.sum(P[mask] * np.log(P[mask] / Q[mask])))
    return grad, kl


def pair_confusion(pred, truth, k):
    """k x k count matrix; entry [t, p] counts rows with truth t predicted as p."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    flat = np.bincount(truth * k + pred, minlength=k * k)
    return flat.reshape(k, k)
