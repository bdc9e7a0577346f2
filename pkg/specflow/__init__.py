"""Specflow - spectral dichotomy experiments for special flows over circle rotations."""

__version__ = "0.1.0"
