"""Spectral vorticity dynamics on the unit disk and annulus."""

__version__ = "0.1.0"
