"""Build script for the compiled episode kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile degrades gracefully to a source-only
install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "divergentevo.engine._speedups",
                ["src/divergentevo/engine/_speedups.pyx"],
                include_dirs=[np.get_include()],
                # fp-contract must stay off: the kernel's arithmetic has to
                # round exactly like the numpy fallback (no FMA fusion).
                extra_compile_args=["-O3", "-march=native", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
