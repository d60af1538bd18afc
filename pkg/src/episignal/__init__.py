"""Pandemic-period tweet and case-count analysis toolkit."""

__version__ = "0.1.0"
