from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The extension is optional: libident.kernels falls back to the pure-Python
# implementation when the compiled module is missing.
extensions = [
    Extension("libident._speedups", ["src/libident/_speedups.pyx"], optional=True),
]

setup(ext_modules=cythonize(extensions, language_level="3") if cythonize else [])
