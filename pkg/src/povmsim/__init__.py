"""Simulability of quantum measurements by restricted measurement classes."""
__version__ = "0.1.0"
