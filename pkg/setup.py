from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/qva/_speedups.pyx"],
        language_level=3,
    )
except ImportError:
    # pure-Python kernels are selected at import time when the extension
    # is absent; nothing else changes
    pass

setup(ext_modules=ext_modules)
