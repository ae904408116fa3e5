"""Lebesgue-type measures on rectangles of R^infinity, Riemann integration of
cylinder functions over them, and the Dirac delta as a limit of box averages."""

__version__ = "0.1.0"
