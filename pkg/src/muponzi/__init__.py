"""Desk-scale verification of Ponzi schemes on coarse spaces and of their
measure-theoretic analogue on the hyperbolic plane."""

__version__ = "0.1.0"
