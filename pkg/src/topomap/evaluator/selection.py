"""Scoring clustering configurations and picking the most discriminative one."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import clustering, embedding, kselect
from ..datamodel import Dataset, atomic_write_text, class_targets, write_tmx
from .classifier import ClassifierSpec, train_classifier
from .pairwise import min_pair, overall_weighted_accuracy, pairwise_matrix

log = logging.getLogger(__name__)

VALID_FRACTION = 0.10


def _canon(d: dict) -> str:
    items = ",".join(f"{k}={d[k]}" for k in sorted(d) if k != "method" and d[k] is not None)
    return f"{d['method']}({items})"


@dataclass(frozen=True)
class ClusteringConfiguration:
    embedding: dict
    clustering: dict
    seed: int = 0

    @property
    def config_id(self) -> str:
        return f"{_canon(self.embedding)}+{_canon(self.clustering)}#seed={self.seed}"

    def with_k(self, k: int) -> "ClusteringConfiguration":
        return ClusteringConfiguration(self.embedding, {**self.clustering, "k": int(k)}, self.seed)

    def to_dict(self) -> dict:
        return {"embedding": dict(self.embedding), "clustering": dict(self.clustering), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict, default_seed: int = 0) -> "ClusteringConfiguration":
        return cls(dict(d["embedding"]), dict(d["clustering"]), int(d.get("seed", default_seed)))


@dataclass
class EvaluationReport:
    config_id: str
    status: str = "ok"
    error: str = ""
    k: int | None = None
    pairwise: np.ndarray | None = None
    min_pair: tuple | None = None
    overall_weighted_accuracy: float = float("nan")
    diagnostics: dict = field(default_factory=dict)
    k_trace: list | None = None

    @property
    def min_acc(self) -> float:
        return self.min_pair[2] if self.min_pair else float("nan")

    def to_json(self) -> dict:
        return {
            "config_id": self.config_id,
            "status": self.status,
            "error": self.error,
            "k": self.k,
            "min_pair": list(self.min_pair) if self.min_pair else None,
            "overall_weighted_accuracy": _num(self.overall_weighted_accuracy),
            "diagnostics": {k: _num(v) for k, v in self.diagnostics.items()},
            "k_trace": self.k_trace,
            "pairwise": "pairwise.tmx" if self.pairwise is not None else None,
        }


def _num(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else v


@dataclass
class CandidateResult:
    config: ClusteringConfiguration
    report: EvaluationReport
    embedded: embedding.EmbeddedSet | None = None
    embedding_model: embedding.EmbeddingModel | None = None
    cluster_model: clustering.ClusterModel | None = None
    labels: np.ndarray | None = None  # cluster id of every dataset row

    @property
    def ok(self) -> bool:
        return self.report.status == "ok"


def resolve_splits(dataset: Dataset):
    """(train, valid, test) row indices; carves the last 10% of train as validation if needed."""
    train = dataset.rows("train")
    valid = dataset.rows("valid")
    test = dataset.rows("test")
    if len(valid) == 0 and len(train) >= 10:
        n_valid = max(1, int(round(VALID_FRACTION * len(train))))
        train, valid = train[:-n_valid], train[-n_valid:]
    return train, valid, test


def diagnostics(E_train, labels, seed=0, sample_size=5000) -> dict:
    from sklearn.metrics import calinski_harabasz_score, davies_bouldin_score, silhouette_score

    X = np.asarray(getattr(E_train, "matrix", E_train))
    n_labels = len(np.unique(labels))
    if not 2 <= n_labels <= len(X) - 1:
        return {"silhouette": float("nan"), "davies_bouldin": float("nan"),
                "calinski_harabasz": float("nan")}
    size = sample_size if len(X) > sample_size else None
    return {
        "silhouette": float(silhouette_score(X, labels, sample_size=size, random_state=seed)),
        "davies_bouldin": float(davies_bouldin_score(X, labels)),
        "calinski_harabasz": float(calinski_harabasz_score(X, labels)),
    }


def choose_k(config: ClusteringConfiguration, dataset: Dataset, E: embedding.EmbeddedSet):
    """Run k selection for a configuration whose k is unset; returns the trace."""
    train, _, test = resolve_splits(dataset)
    targets, n_classes = class_targets(dataset)
    return kselect.select_k(
        E.take(train), E.take(test), targets[train], targets[test], n_classes,
        algorithm=config.clustering["method"], seed=config.seed,
        cluster_params=config.clustering,
    )


def evaluate_candidate(config: ClusteringConfiguration, dataset: Dataset,
                       spec: ClassifierSpec | None = None) -> CandidateResult:
    """Embed, cluster, pseudo-label, train, and score one configuration.

    Failures are captured in the report rather than raised.
    """
    spec = (spec or ClassifierSpec()).with_seed(config.seed)
    report = EvaluationReport(config.config_id)
    result = CandidateResult(config, report)
    try:
        E, model = embedding.embed(dataset, config.embedding, seed=config.seed)
        result.embedded, result.embedding_model = E, model
        if config.clustering.get("k") is None:
            trace = choose_k(config, dataset, E)
            report.k_trace = [[k, a, d] for k, a, d in trace.iterations]
            config = config.with_k(trace.k_star)
            result.config = config
            report.config_id = config.config_id
        train, valid, test = resolve_splits(dataset)
        cm = clustering.fit(E.take(train), config.clustering, seed=config.seed)
        result.cluster_model = cm
        report.k = cm.k
        labels = clustering.assign(cm, E)
        result.labels = labels
        X = dataset.features
        clf = train_classifier(X[train], labels[train], spec, X[valid], labels[valid])
        pred = clf.predict(X[test])
        report.pairwise = pairwise_matrix(pred, labels[test], cm.k)
        report.min_pair = min_pair(report.pairwise)
        report.overall_weighted_accuracy = overall_weighted_accuracy(report.pairwise)
        report.diagnostics = diagnostics(E.matrix[train], cm.assignments, seed=config.seed)
    except Exception as exc:  # candidate failures are recorded, not fatal
        log.warning("candidate %s failed: %s", report.config_id, exc)
        report.status = "failed"
        report.error = f"{type(exc).__name__}: {exc}"
    return result


def _evaluate_star(args):
    return evaluate_candidate(*args)


def select_configuration(candidates, dataset: Dataset, spec: ClassifierSpec | None = None,
                         jobs: int = 1):
    """Evaluate every candidate; return (best CandidateResult or None, all results).

    The best maximizes the minimum pairwise accuracy; ties keep candidate order.
    """
    if not candidates:
        raise ValueError("need at least one candidate configuration")
    work = [(c, dataset, spec) for c in candidates]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_star, work))
    else:
        results = [_evaluate_star(w) for w in work]
    best = None
    for r in results:
        if r.ok and (best is None or r.report.min_acc > best.report.min_acc):
            best = r
    return best, results


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_report(report: EvaluationReport, directory) -> None:
    directory = Path(directory)
    if report.pairwise is not None:
        write_tmx(directory / "pairwise.tmx", report.pairwise)
    atomic_write_text(directory / "report.json", json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")


SUMMARY_COLUMNS = ["rank", "candidate", "config_id", "k", "min_acc", "min_pair_a", "min_pair_b",
                   "overall_w_acc", "silhouette", "davies_bouldin", "calinski_harabasz", "status"]


def _cell(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def summary_csv(results) -> str:
    """Ranking of candidates by minimum pairwise accuracy (failed ones last)."""
    order = sorted(range(len(results)),
                   key=lambda i: (not results[i].ok, -results[i].report.min_acc if results[i].ok else 0, i))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for rank, i in enumerate(order, 1):
        rep = results[i].report
        mp = rep.min_pair or (None, None, None)
        d = rep.diagnostics
        w.writerow([rank, i, rep.config_id, _cell(rep.k), _cell(mp[2]), _cell(mp[0]), _cell(mp[1]),
                    _cell(rep.overall_weighted_accuracy), _cell(d.get("silhouette")),
                    _cell(d.get("davies_bouldin")), _cell(d.get("calinski_harabasz")), rep.status])
    return buf.getvalue()
