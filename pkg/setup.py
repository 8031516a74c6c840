from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "restartq.engine._kernel",
                ["src/restartq/engine/_kernel.pyx"],
                language="c++",
                # -ffp-contract=off: FMA contraction would break the
                # bit-identical equivalence with the pure-Python backend
                extra_compile_args=["-O3", "-std=c++11", "-ffp-contract=off"],
            )
        ],
        language_level="3",
    )

# Without Cython the package still installs; the engine falls back to the
# pure-Python backend at import time.
setup(ext_modules=extensions)
