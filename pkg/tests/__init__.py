"""
Test suite package.
"""
