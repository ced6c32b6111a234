"""Bayesian level-set reconstruction of piecewise-constant acoustic scatterers."""

__version__ = "0.1.0"
