"""
Model-agnostic explanations.
"""
from .importance import permutation_importance
from .lime import LocalExplanation, lime_explain
from .shapley import modality_rollup, shapley_sample, shapley_summary

__all__ = [
    "LocalExplanation",
    "lime_explain",
    "modality_rollup",
    "permutation_importance",
    "shapley_sample",
    "shapley_summary",
]
