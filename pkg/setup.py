"""Build the optional Cython LCS kernel; the package works without it."""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("BIMQA_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "bimqa._lcs_c",
                    ["src/bimqa/_lcs_c.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
