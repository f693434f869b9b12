"""Symbolic and numerical checks of Ehrenfest-type relations in gauge theories."""

__version__ = "0.1.0"
