"""
Utility functions and definitions for airsum: CSV emission and the configuration key registry.
"""
