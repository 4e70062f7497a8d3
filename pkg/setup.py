"""Build the optional compiled root-finding kernel.

The package works without it (a pure-Python fallback is selected at
import time); set RECBOUND_PURE_PYTHON=1 to skip compilation explicitly.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("RECBOUND_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/recbound/_kernel.pyx"], language_level="3"
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
