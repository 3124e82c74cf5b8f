import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension("chessruns._movegen", ["src/chessruns/_movegen.pyx"], extra_compile_args=["-O3"]),
    Extension(
        "chessruns._imbed",
        ["src/chessruns/_imbed.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    ),
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
