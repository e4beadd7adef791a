"""Assertion-inferring mutant selection workbench."""
__version__ = "0.1.0"
