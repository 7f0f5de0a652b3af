"""Spectral radii of Schreier graphs of free groups via exact walk counting."""

__version__ = "0.1.0"
