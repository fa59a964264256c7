from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:  # fall back to the interpreted kernel
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("mims._engine", ["src/mims/_engine.py"], extra_compile_args=["-O2"])],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
