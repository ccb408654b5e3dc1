"""Hypercontractivity coefficient estimation and dependence-measure benchmarks."""

__version__ = "0.1.0"
