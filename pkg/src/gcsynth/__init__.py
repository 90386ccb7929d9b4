"""Guaranteed-cost state feedback with copies of the plant nonlinearities."""

__version__ = "0.1.0"
