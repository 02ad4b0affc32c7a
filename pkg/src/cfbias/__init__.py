"""Benchmarking counterfactual learners under controlled treatment-assignment bias."""

__version__ = "0.1.0"
