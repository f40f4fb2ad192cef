"""Exact computations for the Heisenberg vertex operator algebra and its twisted modules."""

__version__ = "0.1.0"
