"""Bearing-only target localization and circumnavigation without communication."""

__version__ = "0.1.0"
