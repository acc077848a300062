"""Private processing of outsourced network functions."""

__version__ = "0.1.0"
