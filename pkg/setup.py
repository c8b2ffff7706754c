import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "hexoverlap._ckernels",
    ["src/hexoverlap/_ckernels.pyx"],
    include_dirs=[numpy.get_include()],
    language="c++",
    extra_compile_args=["-O3", "-std=c++17"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], compiler_directives={"language_level": "3"}))
