"""
Feature screening by label correlation and class-density overlap.
"""
