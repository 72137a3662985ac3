"""Build hook for the compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so build failures here are non-fatal by design: install with
PAIRTRACK_SKIP_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

if os.environ.get("PAIRTRACK_SKIP_EXT"):
    setup()
else:
    import numpy as np
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "pairtrack._kernels._core",
            ["src/pairtrack/_kernels/_core.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    setup(ext_modules=cythonize(extensions, language_level=3))
