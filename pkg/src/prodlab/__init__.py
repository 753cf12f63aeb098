"""Simulation laboratory for spectra of products of independent iid random matrices."""

__version__ = "0.1.0"
