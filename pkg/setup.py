import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off: keep the C kernel bit-identical to the pure Python twin
# (no FMA contraction), so backend equivalence can be asserted exactly.
extensions = [
    Extension(
        "atombelt._kernel",
        ["src/atombelt/_kernel.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off",
                            "-fno-builtin-sin", "-fno-builtin-cos"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
