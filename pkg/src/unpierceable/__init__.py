"""Nested rectilinear annuli whose limit curve resists rectifiable arcs."""

__version__ = "0.1.0"
