"""Build script for the optional compiled lattice kernel.

The package works without the extension (a pure-Python kernel is selected at
import time), but large lattice runs are only practical with it.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "crossdiff.lattice._kernel",
                ["src/crossdiff/lattice/_kernel.pyx"],
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

setup(ext_modules=ext_modules)
