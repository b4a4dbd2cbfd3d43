"""Synthesized quantum channels for extracting time-ordered bath correlations."""

__version__ = "0.1.0"
