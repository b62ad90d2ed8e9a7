"""Nonparametric maximum likelihood estimation of class probabilities with ReLU networks."""

__version__ = "0.1.0"
