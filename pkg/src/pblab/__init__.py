"""Diffeological vector spaces and pseudo-bundles with exact arithmetic."""

__version__ = "0.1.0"
