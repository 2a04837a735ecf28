"""Spectral form factors of crystalline random-unitary ensembles."""

__version__ = "0.1.0"
