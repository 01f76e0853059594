"""Build script: compiles the optional search kernel.

The package is fully functional without the extension (a pure-Python kernel
is selected at import time); set GURAG_REACH_PURE=1 to skip compilation.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("GURAG_REACH_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/gurag_reach/_kernel.pyx"],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
