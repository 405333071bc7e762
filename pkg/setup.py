"""Build script.  The compiled space-time search kernel is optional: when
Cython (or a working C toolchain) is unavailable, or CONVOYPLAN_NO_EXT=1 is
set, the package installs without it and falls back to the pure-Python kernel
at import time."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CONVOYPLAN_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("convoyplan._spacetime", ["src/convoyplan/_spacetime.pyx"])],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
