#!/usr/bin/env python3

from setuptools import setup

# Read the version without importing the package (its __init__ imports pydantic etc.).
__version__ = None
with open("fermi_blockade/version.py") as f:
    exec(f.read())


description = """Pauli blocking of light scattering.
Suppression of spontaneous photon scattering in a trapped degenerate Fermi gas."""

with open("README.md") as f:
    long_description = f.read()

setup(
    name="fermi-blockade",
    version=__version__,
    description=description,
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="MIT",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Topic :: Scientific/Engineering :: Physics",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Natural Language :: English",
    ],
    packages=["fermi_blockade"],
    include_package_data=True,
    keywords='fermi gas pauli blocking light scattering',
    python_requires=">=3.8",
    install_requires=["numpy>=1.20",
                      "scipy>=1.7",
                      "pydantic>=1.8,<2"],
    entry_points={"console_scripts": ["fermi-blockade = fermi_blockade.cli:main"]}
)
