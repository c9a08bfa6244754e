"""Pseudo-label classifier, weighted pairwise accuracy and configuration selection."""
from importlib import import_module

from .pairwise import (
    min_pair,
    min_pairwise_accuracy,
    overall_weighted_accuracy,
    pair_counts,
    pairwise_matrix,
    weighted_pairwise_accuracy,
)

_EXPORTS = {
    "ClassifierModel": "classifier",
    "ClassifierSpec": "classifier",
    "class_weights": "classifier",
    "train_classifier": "classifier",
    "CandidateResult": "selection",
    "ClusteringConfiguration": "selection",
    "EvaluationReport": "selection",
    "evaluate_candidate": "selection",
    "resolve_splits": "selection",
    "select_configuration": "selection",
    "summary_csv": "selection",
}

__all__ = [
    "min_pair",
    "min_pairwise_accuracy",
    "overall_weighted_accuracy",
    "pair_counts",
    "pairwise_matrix",
    "weighted_pairwise_accuracy",
    *sorted(_EXPORTS),
]


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
