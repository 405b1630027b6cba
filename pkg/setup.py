"""
Package setup configuration.
"""
from pathlib import Path
from setuptools import setup, find_packages

# Read requirements
requirements = []
with open("requirements.txt") as f:
    for line in f:
        line = line.strip()
        if line and not line.startswith("#") and not line.startswith("pytest"):
            requirements.append(line)

# Read README
readme = Path("README.md").read_text()

setup(
    name="veridict",
    version="0.1.0",
    description="Multimodal deception classification from audio, visual and annotation features",
    long_description=readme,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=requirements,
    extras_require={
        "test": ["pytest>=7.4.0", "pytest-mock>=3.11.1", "pytest-benchmark>=4.0.0", "pytest-cov>=4.1.0"],
    },
    entry_points={
        "console_scripts": [
            "veridict=src.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    python_requires=">=3.9",
    include_package_data=True,
    zip_safe=False,
)
