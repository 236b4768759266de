"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a numpy/pure-Python
fallback is selected at import time); any compiler failure therefore only
emits a warning and installs the pure version.
"""
import os
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """build_ext that degrades to a pure install when compilation fails."""

    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:  # missing compiler, broken toolchain, ...
            warnings.warn(f"C extension build failed ({exc}); "
                          "installing pure-Python kernels only")

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); "
                          "falling back to pure-Python kernels")


def extensions():
    if os.environ.get("EXACTMRF_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython/numpy unavailable at build time; "
                      "installing pure-Python kernels only")
        return []
    ext = Extension(
        "exactmrf.kernels._ckern",
        sources=["src/exactmrf/kernels/_ckern.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
