import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("DIFINV_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("difinv.expr._evalkernel", ["src/difinv/expr/_evalkernel.pyx"])],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
