"""Simulation of two-mode squeezing between two NV-center ensembles coupled through phonons."""

__version__ = "0.1.0"
