"""Choosing the number of clusters by majority-vote accuracy saturation.

Clustering is read as a classifier: each cluster predicts the majority
training label of its members. ``k`` grows in steps of the class count until
the mean of the last two accuracy slopes falls below ``PLATEAU``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import clustering
from .datamodel import atomic_write_text

PLATEAU = 0.001


def majority_label_map(model, E_train, y_train) -> dict[int, int]:
    """Cluster id -> most frequent training label (ties: smallest label).

    Clusters without training rows get the global training majority.
    """
    y = np.asarray(y_train, dtype=np.int64)
    ids = clustering.assign(model, E_train)
    n_labels = int(y.max()) + 1 if len(y) else 1
    global_major = int(np.argmax(np.bincount(y, minlength=n_labels)))
    out = {}
    for c in range(model.k):
        members = y[ids == c]
        if len(members) == 0:
            out[c] = global_major
        else:
            out[c] = int(np.argmax(np.bincount(members, minlength=n_labels)))
    return out


def predict_labels(model, label_map, E) -> np.ndarray:
    ids = clustering.assign(model, E)
    return np.array([label_map[int(c)] for c in ids], dtype=np.int64)


@dataclass
class KSelectionTrace:
    ks: list = field(default_factory=list)
    accuracies: list = field(default_factory=list)
    derivatives: list = field(default_factory=list)
    exhausted: bool = False
    models: list = field(default_factory=list, repr=False)

    @property
    def k_star(self) -> int:
        return self.ks[-1]

    @property
    def iterations(self):
        return list(zip(self.ks, self.accuracies, self.derivatives))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "accuracy", "derivative"])
        for k, a, d in self.iterations:
            w.writerow([k, repr(float(a)), repr(float(d))])
        return buf.getvalue()

    def save(self, path) -> None:
        atomic_write_text(path, self.to_csv())


def select_k(E_train, E_test, y_train, y_test, n_classes: int, algorithm="kmeans",
             seed: int = 0, cluster_params=None, keep_models=False) -> KSelectionTrace:
    if n_classes < 2:
        raise ValueError("select_k needs n_classes >= 2")
    y_test = np.asarray(y_test, dtype=np.int64)
    n_train = len(getattr(E_train, "matrix", E_train))
    params = dict(cluster_params or {})
    params.pop("k", None)
    params.pop("method", None)

    trace = KSelectionTrace()
    delta0, alpha0, k0, k = 0.0, 0.0, 0, n_classes
    while True:
        if k > n_train:
            trace.exhausted = True
            break
        model = clustering.fit(E_train, {"method": algorithm, "k": k, **params}, seed=seed)
        label_map = majority_label_map(model, E_train, y_train)
        pred = predict_labels(model, label_map, E_test)
        alpha1 = float(np.mean(pred == y_test))
        delta1 = (alpha1 - alpha0) / (k - k0)
        trace.ks.append(k)
        trace.accuracies.append(alpha1)
        trace.derivatives.append(delta1)
        if keep_models:
            trace.models.append(model)
        if (delta1 + delta0) / 2 < PLATEAU:
            break
        delta0, alpha0, k0 = delta1, alpha1, k
        k += n_classes
    if not trace.ks:
        raise ValueError(f"k={n_classes} already exceeds the {n_train} training rows")
    return trace
