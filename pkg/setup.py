import os

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# Build failures are tolerated: trajgen falls back to its numpy kernel.
extensions = [
    Extension(
        "trajgen._ckernel",
        ["src/trajgen/_ckernel.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

if os.environ.get("TRAJGEN_NO_EXT"):
    extensions = []

setup(ext_modules=cythonize(extensions, language_level=3))
