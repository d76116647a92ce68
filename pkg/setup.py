"""Build script: compiles the optional Cython core.

The extension is best-effort: when Cython or a C compiler is missing the
package installs anyway and falls back to the numpy backend at import time.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    ext = Extension(
        "nlcsbp._kernels._core",
        ["src/nlcsbp/_kernels/_core.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing: fall back to pure python
            warnings.warn(f"compiled core skipped ({exc}); using numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled core skipped ({exc}); using numpy fallback")


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
