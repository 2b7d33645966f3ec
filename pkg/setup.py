from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # The compiled kernel is optional; labelkit falls back to the pure-Python
    # implementation when the extension is absent.
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("labelkit._editdist", ["src/labelkit/_editdist.pyx"])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
