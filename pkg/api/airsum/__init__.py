"""Blind federated edge learning with digital q-QAM over-the-air aggregation."""

__version__ = "0.1.0"
