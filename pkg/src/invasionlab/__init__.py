"""Pushed pattern-forming invasion fronts in FitzHugh-Nagumo:
simulation, spectral analysis, and phase diagnostics."""

__version__ = "0.1.0"

from .core import Grid, Params, State, Weight  # noqa: F401
