import os

import numpy as np
from setuptools import Extension, setup

# FRACEXT_NO_EXT=1 installs the pure-Python package only
ext_modules = []
if os.environ.get("FRACEXT_NO_EXT") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fracext._core",
                ["src/fracext/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
