"""Discrete dynamical optimal transport on finite-volume meshes."""

__version__ = "0.1.0"
