"""BIRCH: single-pass CF-tree summarization followed by Ward merging of leaf subclusters."""
from __future__ import annotations

import numpy as np

from . import _accel
from .clustering import ClusterModel, ClusteringError

MAX_REBUILDS = 5


class _Entry:
    __slots__ = ("n", "ls", "ss", "child")

    def __init__(self, n, ls, ss, child=None):
        self.n = n
        self.ls = ls
        self.ss = ss
        self.child = child

    @property
    def centroid(self):
        return self.ls / self.n

    def radius_with(self, x):
        n = self.n + 1
        ls = self.ls + x
        ss = self.ss + float(x @ x)
        c = ls / n
        return np.sqrt(max(ss / n - float(c @ c), 0.0))

    def absorb(self, x):
        self.n += 1
        self.ls = self.ls + x
        self.ss += float(x @ x)


class _Node:
    __slots__ = ("leaf", "entries")

    def __init__(self, leaf, entries=None):
        self.leaf = leaf
        self.entries = entries if entries is not None else []

    def summary(self):
        n = sum(e.n for e in self.entries)
        ls = np.sum([e.ls for e in self.entries], axis=0)
        ss = sum(e.ss for e in self.entries)
        return _Entry(n, ls, ss, child=self)


def _closest(entries, x):
    cents = np.array([e.centroid for e in entries])
    return int(np.argmin(np.sum((cents - x) ** 2, axis=1)))


def _split(node):
    cents = np.array([e.centroid for e in node.entries])
    d2 = np.sum((cents[:, None, :] - cents[None, :, :]) ** 2, axis=2)
    a, b = np.unravel_index(np.argmax(d2), d2.shape)
    left, right = _Node(node.leaf), _Node(node.leaf)
    for i, e in enumerate(node.entries):
        (left if d2[i, a] <= d2[i, b] else right).entries.append(e)
    return left, right


class CFTree:
    def __init__(self, threshold, branching=50):
        if branching < 2:
            raise ClusteringError("branching factor must be >= 2")
        self.threshold = threshold
        self.branching = branching
        self.root = _Node(leaf=True)

    def insert(self, x):
        split = self._insert(self.root, x)
        if split is not None:
            self.root = _Node(leaf=False, entries=[split[0].summary(), split[1].summary()])

    def _insert(self, node, x):
        if node.leaf:
            if node.entries:
                i = _closest(node.entries, x)
                e = node.entries[i]
                if e.radius_with(x) <= self.threshold:
                    e.absorb(x)
                    return None
            node.entries.append(_Entry(1, x.copy(), float(x @ x)))
        else:
            i = _closest(node.entries, x)
            e = node.entries[i]
            split = self._insert(e.child, x)
            if split is None:
                e.absorb(x)
            else:
                node.entries[i:i + 1] = [split[0].summary(), split[1].summary()]
        if len(node.entries) > self.branching:
            return _split(node)
        return None

    def leaf_entries(self):
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.leaf:
                out.extend(node.entries)
            else:
                stack.extend(e.child for e in reversed(node.entries))
        return out


def auto_threshold(X, sample=100):
    """Half the mean nearest-neighbour distance over an evenly spaced row sample."""
    n = X.shape[0]
    if n < 2:
        return 0.0
    idx = np.unique(np.linspace(0, n - 1, min(sample, n)).astype(int))
    S = X[idx]
    d2 = np.sum((S[:, None, :] - S[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    return 0.5 * float(np.mean(np.sqrt(d2.min(axis=1))))


def ward_merge(centroids, sizes, k):
    """Weighted Ward agglomeration of ``centroids`` down to ``k`` groups.

    Returns the group index of every input centroid (groups numbered by first
    appearance).
    """
    cents = np.array(centroids, dtype=np.float64)
    sizes = np.array(sizes, dtype=np.float64)
    m = len(cents)
    group = np.arange(m)
    active = np.ones(m, dtype=bool)

    def costs(i):
        d2 = np.sum((cents - cents[i]) ** 2, axis=1)
        c = sizes * sizes[i] / (sizes + sizes[i]) * d2
        c[~active] = np.inf
        c[i] = np.inf
        return c

    D = np.full((m, m), np.inf)
    for i in range(m):
        D[i] = costs(i)
    for _ in range(m - k):
        i, j = np.unravel_index(np.argmin(D), D.shape)
        i, j = min(i, j), max(i, j)
        total = sizes[i] + sizes[j]
        cents[i] = (sizes[i] * cents[i] + sizes[j] * cents[j]) / total
        sizes[i] = total
        active[j] = False
        group[group == j] = i
        D[j, :] = np.inf
        D[:, j] = np.inf
        D[i] = costs(i)
        D[:, i] = D[i]
    _, relabeled = np.unique(group, return_inverse=True)
    return relabeled


def birch_fit(E, k: int, branching: int = 50, threshold=None, seed: int = 0) -> ClusterModel:
    X = np.asarray(getattr(E, "matrix", E), dtype=np.float64)
    n = X.shape[0]
    if k < 1:
        raise ClusteringError("k must be >= 1")
    if k > n:
        raise ClusteringError(f"k={k} exceeds the number of rows ({n})")
    t = auto_threshold(X) if threshold in (None, "auto") else float(threshold)
    for _ in range(MAX_REBUILDS + 1):
        tree = CFTree(t, branching)
        for x in X:
            tree.insert(x)
        leaves = tree.leaf_entries()
        if len(leaves) >= k:
            break
        t /= 2.0
    else:
        raise ClusteringError(
            f"BIRCH produced only {len(leaves)} leaf subclusters for k={k} after {MAX_REBUILDS} rebuilds"
        )

    sub_cents = np.array([e.centroid for e in leaves])
    sub_sizes = np.array([e.n for e in leaves], dtype=np.float64)
    groups = ward_merge(sub_cents, sub_sizes, k)
    centroids = np.zeros((k, X.shape[1]))
    for g in range(k):
        w = sub_sizes[groups == g]
        centroids[g] = (w[:, None] * sub_cents[groups == g]).sum(axis=0) / w.sum()
    labels, dist = _accel.nearest_centroid(X, centroids)
    counts = np.bincount(labels, minlength=k)
    return ClusterModel(
        method="birch",
        centroids=centroids,
        assignments=labels,
        seed=seed,
        inertia=float(dist.sum()),
        empty=tuple(int(c) for c in np.flatnonzero(counts == 0)),
    )
