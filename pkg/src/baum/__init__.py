"""Bayesian analysis of untargeted metabolomics data.

Joint inference of feature-to-metabolite matching uncertainty and
network-informed metabolite significance from feature-level statistics.
"""

__version__ = "0.1.0"
