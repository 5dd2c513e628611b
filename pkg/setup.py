import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

compile_args = ["-O3", "-fno-wrapv"]
if os.environ.get("PAIRWALK_NATIVE", "1") != "0":
    compile_args.append("-march=native")

extensions = [
    Extension(
        "pairwalk._rk4",
        ["src/pairwalk/_rk4.pyx", "src/pairwalk/_ext/rk4_kernel.c"],
        include_dirs=[np.get_include(), "src/pairwalk"],
        extra_compile_args=compile_args,
        # a failed build leaves the numpy fallback in charge
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
