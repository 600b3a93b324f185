"""Command-line service for the rectifier library."""

__version__ = "0.1.0"
