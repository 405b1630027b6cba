"""
Audio decoding and feature extraction.
"""
