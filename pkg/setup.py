"""Builds the optional Cython kernels; the package falls back to numpy without them."""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("TCSCALE_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "tcscale._kernels",
                    ["src/tcscale/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": 3},
        )
    except Exception as e:  # no Cython/numpy at build time
        print(f"tcscale: building without compiled kernels ({e})", file=sys.stderr)

setup(ext_modules=ext_modules)
