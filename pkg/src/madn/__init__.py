"""Multiplex attention/disregard networks from per-country news mention counts."""

__version__ = "0.1.0"
