"""vdcook: a self-evolving video dataset construction engine."""

__version__ = "0.1.0"
