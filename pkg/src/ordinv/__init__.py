"""Workbench for order-invariant two-variable logic over finite structures."""

__version__ = "0.1.0"
