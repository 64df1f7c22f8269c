import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("BAUM_PURE_PYTHON", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("baum._core", ["src/baum/_core.pyx"], include_dirs=[numpy.get_include()], extra_compile_args=["-O3"])],
            language_level=3,
        )

setup(ext_modules=ext_modules)
