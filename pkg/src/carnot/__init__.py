"""Exact enveloping-algebra certificates for L^1 estimates on stratified groups."""

__version__ = "0.1.0"
