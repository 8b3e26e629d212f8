from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; ftes falls back at import time
    cythonize = None

extensions = [
    Extension(
        "ftes._kernels",
        ["src/ftes/_kernels.pyx"],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=(
        cythonize(extensions, compiler_directives={"language_level": "3"}) if cythonize else []
    ),
)
