"""Build the optional compiled kernels; the package works without them."""
from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("superrad._kernels", ["src/superrad/_kernels.pyx"],
                   include_dirs=[numpy.get_include()], extra_compile_args=["-O3", "-fcx-limited-range", "-fopenmp"],
                   extra_link_args=["-fopenmp"])],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
