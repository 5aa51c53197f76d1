"""Build the optional compiled BAOAB kernel.

The package imports fine without it; ``levidm.langevin`` falls back to a
vectorised NumPy/SciPy integrator when the extension is missing.
"""
import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without Cython
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("LEVIDM_NO_EXT"):
    random_lib = os.path.join(os.path.dirname(np.__file__), "random", "lib")
    ext = Extension(
        "levidm._baoab",
        ["src/levidm/_baoab.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[random_lib],
        libraries=["npyrandom"],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
