from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off: the kernels promise bit-identical results to the naive
# reference accumulation; fused multiply-add would change the rounding.
extensions = [
    Extension(
        "alttrain._kernels",
        ["src/alttrain/_kernels.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
