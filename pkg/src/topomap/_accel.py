"""Kernel backend selection.

The compiled extension is used when importable; set ``TOPOMAP_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("TOPOMAP_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

nearest_centroid = _impl.nearest_centroid
tsne_gradient = _impl.tsne_gradient
pair_confusion = _impl.pair_confusion

__all__ = ["BACKEND", "nearest_centroid", "tsne_gradient", "pair_confusion"]
