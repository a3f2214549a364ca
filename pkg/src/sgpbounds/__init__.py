"""Sparse variational GP regression with certified KL bounds."""

__version__ = "0.1.0"
