"""Surrogate-assisted layout optimization toolkit.

Trains dense feedforward regression surrogates for layout performance
metrics and minimizes a weighted composition of them with a suite of
differential evolution variants.
"""

__version__ = "0.1.0"
