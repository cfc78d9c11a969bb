"""Maximal operators and Orlicz-type functionals with numerical checks."""

__version__ = "0.1.0"
