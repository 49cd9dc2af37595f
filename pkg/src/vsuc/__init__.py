"""Voltage-stability-constrained stochastic unit commitment as a MISOCP."""

__version__ = "0.1.0"
