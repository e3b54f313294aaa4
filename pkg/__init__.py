"""Empirical-Bayes ranking of noisy estimates by posterior mean."""
from . import env
