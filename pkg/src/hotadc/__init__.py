"""Behavioural simulator and characterisation toolkit for a high-temperature
second-order single-bit delta-sigma ADC."""

__version__ = "0.1.0"
