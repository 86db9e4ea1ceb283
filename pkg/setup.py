"""Build script for the optional compiled rollout core.

The package works without the extension (a pure-Python fallback is selected
at import time); building it just makes episode simulation much faster.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "hypershape._core._landercore",
                ["src/hypershape/_core/_landercore.pyx"],
                include_dirs=[numpy.get_include()],
                # No -ffast-math / -march=native: the compiled kernel must be
                # bit-identical to the pure-Python fallback.
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
