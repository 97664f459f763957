"""Build the optional Cython kernel.

If Cython or a C compiler is unavailable the package still installs and
``picketfence.kernels`` falls back to the pure-Python implementation.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("PICKETFENCE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "picketfence._kernels",
                    ["src/picketfence/_kernels.pyx"],
                    include_dirs=[np.get_include()],
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
