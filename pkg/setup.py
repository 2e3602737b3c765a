"""Build script for the optional compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time); building it makes the per-event hot loop roughly an order of
magnitude faster.  See benchmarks/bench_kernels.py.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [Extension("spikesoc._kernels", ["src/spikesoc/_kernels.pyx"])],
        language_level=3,
    )
else:
    extensions = []

setup(ext_modules=extensions)
