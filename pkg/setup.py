"""Build script: compiles the optional Cython kernel extension.

Set RECZILLA_SKIP_CYTHON=1 to install without the compiled kernels; the
package then falls back to the pure-Python implementations at import time.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("RECZILLA_SKIP_CYTHON", "0") != "1":
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "reczilla.kernels._kernels_cy",
                ["src/reczilla/kernels/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
