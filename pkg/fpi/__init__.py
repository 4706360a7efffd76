"""
fpi - full-program induction for array programs parameterized by N
"""

__version__ = "1.0.0"
