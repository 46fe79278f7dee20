"""Build script: compiles the optional accelerator extension.

The extension is a pure speed-up; if Cython or a C compiler is missing the
install proceeds and the package falls back to the numpy kernels at import.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the accelerator if possible, otherwise warn and continue."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing / misconfigured
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        import warnings

        warnings.warn(
            f"compiled kernels unavailable ({exc}); "
            "kinetostat will use the pure-Python kernels"
        )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "kinetostat._kernels._core",
        ["src/kinetostat/_kernels/_core.pyx"],
    )
    return cythonize([ext], language_level="3")


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
