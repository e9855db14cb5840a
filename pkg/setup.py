"""Build the optional Cython propagation kernels.

The package works without them: ``mipconflict.kernels`` falls back to the
numpy implementation when the extension is missing.
"""
from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "mipconflict._kernels",
                ["src/mipconflict/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
