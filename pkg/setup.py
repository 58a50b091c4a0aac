import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; evoplat.kernels falls back
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("EVOPLAT_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "evoplat._core",
                ["src/evoplat/_core.pyx"],
                include_dirs=[np.get_include()],
                # no contraction/fast-math: the kernel must match the Python path bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )

setup(ext_modules=ext_modules)
