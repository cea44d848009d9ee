"""Exact verification of the space problem and numerical Weyl and Cartan geometry."""

__version__ = "0.1.0"
