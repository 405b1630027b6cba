"""
Metrics, cross-validation harness and report rendering.
"""
from .harness import ModelSpec, compare_models, run_holdout, run_kfold, run_trials
from .metrics import classification_report, confusion, summarize_folds

__all__ = [
    "ModelSpec",
    "classification_report",
    "compare_models",
    "confusion",
    "run_holdout",
    "run_kfold",
    "run_trials",
    "summarize_folds",
]
