"""
Moment superoperators and spectral gaps of permutationally invariant random circuits.
"""

__version__ = "0.1.0"
