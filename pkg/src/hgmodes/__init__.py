"""Hermite-Gaussian mode datasets, simulated holographic test data and a
small from-scratch CNN classifier."""

__version__ = "0.1.0"
