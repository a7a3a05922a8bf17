"""Partitioned-RIS symbiotic radio: design, analysis and Monte Carlo simulation."""

__version__ = "0.1.0"
