"""Monotone probabilistic cellular automata: simulation, edge speeds,
Peierls-bound certificates and random contour sampling."""

__version__ = "0.1.0"
