"""Sparse identification of polynomial dynamics under side information."""

__version__ = "0.1.0"
