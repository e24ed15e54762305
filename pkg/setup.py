"""Build script: compiles the optional tone-synthesis extension.

The extension is a speed-up only; if Cython or a C compiler is missing the
package installs anyway and falls back to the numpy implementation selected
at import time in ``framesense._kernels``.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "framesense._kernels._tones",
                sources=["src/framesense/_kernels/_tones.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError as exc:  # pragma: no cover - build environment dependent
    print(f"framesense: skipping compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
