"""Build script: compiles the optional fixed-point kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time); compilation failures are therefore demoted to warnings.
Set COMMITTEE_MATCH_PURE=1 to skip the extension entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that degrades to a pure-Python install on any failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, broken toolchain, ...
            print(f"warning: skipping compiled kernels ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); "
                  "the NumPy fallback will be used", file=sys.stderr)


def _extensions():
    if os.environ.get("COMMITTEE_MATCH_PURE") == "1":
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython not available; building without compiled kernels",
              file=sys.stderr)
        return []
    return cythonize(
        [
            Extension(
                "committee_match._kernels._speedups",
                ["src/committee_match/_kernels/_speedups.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
        quiet=True,
    )


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
