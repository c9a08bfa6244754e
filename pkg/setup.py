"""Build the optional Cython kernels.

The package works without them: ``topomap._accel`` falls back to the numpy
implementations in ``topomap._kernels_py`` when the extension is missing.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if not os.environ.get("TOPOMAP_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "topomap._kernels",
                    ["src/topomap/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError as exc:  # pragma: no cover
        print(f"topomap: building without Cython kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
