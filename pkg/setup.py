"""
Backward-compatible setup.py for older pip versions
"""
from setuptools import setup, find_packages

# For backwards compatibility with older pip versions
setup(
    name="certiplace",
    packages=find_packages(include=["certiplace*"]),
    python_requires=">=3.9",
)
