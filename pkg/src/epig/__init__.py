"""Bayesian active learning with prediction-oriented (EPIG) and parameter-oriented (BALD) acquisition."""

__version__ = "0.1.0"
