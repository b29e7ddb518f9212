"""Desk-scale constructions for nilpotent group actions: rectangles, charts, markers, orthogonal tilings."""

__version__ = "0.1.0"
