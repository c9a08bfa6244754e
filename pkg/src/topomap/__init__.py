"""Topographical maps of a dataset's input space for mutation analysis of learned models."""
from importlib import import_module

from ._accel import BACKEND

__version__ = "0.1.0"

# submodules pull in scipy; resolve public names on first access so that
# light entry points (eval-pair) start quickly
_EXPORTS = {
    "ClusterModel": "clustering",
    "assign": "clustering",
    "birch_fit": "clustering",
    "kmeans_fit": "clustering",
    "BucketMap": "datamodel",
    "Dataset": "datamodel",
    "bucketize": "datamodel",
    "load_dataset": "datamodel",
    "save_dataset": "datamodel",
    "EmbeddedSet": "embedding",
    "EmbeddingModel": "embedding",
    "fit_linear": "embedding",
    "fit_tsne": "embedding",
    "import_embedding": "embedding",
    "transform": "embedding",
    "KSelectionTrace": "kselect",
    "majority_label_map": "kselect",
    "select_k": "kselect",
}

__all__ = ["BACKEND", *sorted(_EXPORTS)]


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
