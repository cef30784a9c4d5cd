"""Build script: compiles the optional fast-kernel extension.

The package is fully functional without the extension (a pure numpy
fallback is selected at import time), so a failed compile only costs
speed. Set LATMATCH_NO_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("LATMATCH_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "latmatch._kernels._core",
                    sources=["src/latmatch/_kernels/_core.pyx"],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
