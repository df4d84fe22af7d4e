import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the accelerator extension if possible; fall back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler / no Cython
            print(f"[coopmac] extension build skipped ({exc}); "
                  "pure-Python kernels will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"[coopmac] building {ext.name} failed ({exc}); "
                  "pure-Python kernels will be used")


try:
    from Cython.Build import cythonize
    extensions = cythonize(
        [Extension(
            "coopmac._core._kernels",
            ["src/coopmac/_core/_kernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
