from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

sources = [
    "bindings/module.cpp",
    "src/sde.cpp",
    "src/payoff.cpp",
    "src/level_stats.cpp",
    "src/planner.cpp",
    "src/mimc.cpp",
    "src/mimc_oracles.cpp",
    "src/driver.cpp",
    "src/config.cpp",
    "src/figures.cpp",
]

setup(
    ext_modules=[
        Pybind11Extension(
            "wmlmc._core",
            sources,
            include_dirs=["include", "vendor"],
            cxx_std=20,
        )
    ],
    cmdclass={"build_ext": build_ext},
)
