"""Build script for the optional compiled kernel extension.

The package works without the extension: ``depprobe._kernels`` falls back
to the numpy implementation when the compiled module is absent.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:  # pure-python install
    numpy = None
    cythonize = None


if cythonize is not None:
    extensions = [
        Extension(
            "depprobe._kernels._ckernels",
            sources=["src/depprobe/_kernels/_ckernels.pyx"],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
            optional=True,
        )
    ]
    setup(ext_modules=cythonize(extensions, language_level=3))
else:
    setup()
