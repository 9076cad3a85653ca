from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "quditlink._kernel_cy",
                ["src/quditlink/_kernel_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )
except ImportError:
    # Pure-Python install: the package falls back to the NumPy kernel.
    ext_modules = []

setup(ext_modules=ext_modules)
