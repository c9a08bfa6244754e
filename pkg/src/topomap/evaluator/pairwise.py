"""Weighted pairwise accuracy between two clusters and its minimum over all pairs.

For a pair (A, B) only rows whose truth and prediction both lie in {A, B} are
kept. With |A| = n_AA + n_BA and |B| = n_BB + n_AB, the minority side is
up-weighted by w = |majority| / |minority|. Clearing the fraction gives the
integer form used here::

    (|B| n_AA + |A| n_BB) / (|B| n_AA + |A| n_BB + |B| n_BA + |A| n_AB)

which is evaluated exactly and is bit-for-bit symmetric in A and B. If one
side keeps no rows the value reduces to the accuracy of the other side; if
neither does, the pair is undefined (``None`` / NaN).
"""
from __future__ import annotations

import numpy as np

from .. import _accel


def pair_counts(pred, truth, A, B):
    """(n_AA, n_BA, n_BB, n_AB): n_BA counts A rows predicted as B."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    tA, tB = truth == A, truth == B
    pA, pB = pred == A, pred == B
    return (int(np.sum(tA & pA)), int(np.sum(tA & pB)),
            int(np.sum(tB & pB)), int(np.sum(tB & pA)))


def _wacc(n_aa, n_ba, n_bb, n_ab):
    size_a = n_aa + n_ba
    size_b = n_bb + n_ab
    if size_a == 0 and size_b == 0:
        return None
    if size_a == 0:
        return n_bb / size_b
    if size_b == 0:
        return n_aa / size_a
    num = size_b * n_aa + size_a * n_bb
    return num / (num + size_b * n_ba + size_a * n_ab)


def weighted_pairwise_accuracy(pred, truth, A, B):
    """Weighted accuracy of the classifier on the cluster pair (A, B); ``None`` if undefined."""
    if A == B:
        raise ValueError("pair needs two distinct clusters")
    return _wacc(*pair_counts(pred, truth, A, B))


def pairwise_matrix(pred, truth, k: int) -> np.ndarray:
    """Symmetric k x k matrix of pair values; NaN on the diagonal and for undefined pairs."""
    conf = _accel.pair_confusion(np.asarray(pred, dtype=np.int64),
                                 np.asarray(truth, dtype=np.int64), k)
    out = np.full((k, k), np.nan)
    for a in range(k):
        for b in range(a + 1, k):
            v = _wacc(int(conf[a, a]), int(conf[a, b]), int(conf[b, b]), int(conf[b, a]))
            if v is not None:
                out[a, b] = out[b, a] = v
    return out


def min_pair(matrix):
    """(A, B, value) of the smallest defined entry; ties go to the smallest (A, B)."""
    k = matrix.shape[0]
    best = None
    for a in range(k):
        for b in range(a + 1, k):
            v = matrix[a, b]
            if np.isnan(v):
                continue
            if best is None or v < best[2]:
                best = (a, b, float(v))
    if best is None:
        raise ValueError("every cluster pair is undefined")
    return best


def min_pairwise_accuracy(pred, truth, k: int):
    if k < 2:
        raise ValueError("need k >= 2")
    return min_pair(pairwise_matrix(pred, truth, k))


def overall_weighted_accuracy(matrix) -> float:
    """Unweighted mean of the defined pair values."""
    iu = np.triu_indices(matrix.shape[0], 1)
    vals = matrix[iu]
    vals = vals[~np.isnan(vals)]
    return float(vals.mean()) if len(vals) else float("nan")
