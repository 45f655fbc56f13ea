"""Hexacopter altitude control with a self-evolving neuro-fuzzy controller."""

__version__ = "0.1.0"
