# pylint: disable=consider-using-with
from setuptools import setup


version = (
    open("burgerskit/__init__.py", encoding="utf8")
    .read()
    .split("__version__ = ")[-1]
    .split("\n")[0]
    .strip("")
    .strip("'")
    .strip('"')
)

setup(
    name="burgerskit",
    version=version,
    description="Pseudo-spectral numerics for forced Burgers equations, their Cole-Hopf form and inertial manifolds",
    long_description=open("README.md", encoding="utf8").read(),
    long_description_content_type="text/markdown",
    license="MIT",
    packages=["burgerskit"],
    include_package_data=True,
    entry_points="""
        [console_scripts]
        burgerskit=burgerskit.__main__:main
    """,
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "pydantic>=2",
    ],
    extras_require={
        "dev": [
            "black",
            "mypy",
            "pylint",
            "types-setuptools",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Physics",
    ],
)
