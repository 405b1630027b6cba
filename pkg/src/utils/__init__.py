"""
Numerical helpers, deterministic randomness and environment utilities.
"""
