"""Builds the optional compiled kernel extension.

`python setup.py build_ext --inplace` drops the shared object next to the
pure-Python fallback; the package works (more slowly) without it.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [Extension("diffauction._kernels._engine_cy",
                   ["src/diffauction/_kernels/_engine_cy.pyx"],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
