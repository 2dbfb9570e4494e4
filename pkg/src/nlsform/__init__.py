"""Frequency-space normal forms and modified energies for periodic NLS."""

__version__ = "0.1.0"
