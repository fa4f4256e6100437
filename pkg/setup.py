"""Build script for the optional compiled sampler kernel.

The package works without the extension: tvcm.mcmc falls back to a pure
NumPy implementation of the same kernel contract when the import fails.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "tvcm._gibbs_kernel",
        ["src/tvcm/_gibbs_kernel.pyx"],
        extra_compile_args=["-O3"],
    )
]

if cythonize is not None:
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
else:
    ext_modules = []

setup(ext_modules=ext_modules)
