"""Build script: compiles the optional fast extension core.

The package works without the extension (a numpy fallback is selected at
import time), so compilation failures are downgraded to a warning.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "qel._fastcore",
                ["src/qel/_fastcore.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    warnings.warn(f"building without compiled core ({exc}); numpy fallback will be used")

setup(ext_modules=ext_modules)
