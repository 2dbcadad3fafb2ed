from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "limbfit.kernels._corex",
                ["src/limbfit/kernels/_corex.pyx"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython: the package still works through the pure-numpy kernels.
    extensions = []

setup(ext_modules=extensions)
