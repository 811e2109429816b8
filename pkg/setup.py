import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# libnpyrandom provides the C entry points of the numpy bit-generator
# distributions, letting the compiled kernels consume the exact same
# PCG64 streams as numpy.random.Generator.
_npy_random_lib = os.path.join(os.path.dirname(np.random.__file__), "lib")

extensions = [
    Extension(
        "gwcheck._core",
        sources=["src/gwcheck/_core.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[_npy_random_lib],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
)
