"""
Classifier families: logistic regression, random forest, 1D-CNN and spectral GCN.
"""
from .base import Classifier, create_model, threshold

__all__ = ["Classifier", "create_model", "threshold"]
