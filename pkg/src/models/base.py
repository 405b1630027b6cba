"""
Classifier interface and model factory.
"""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.errors import ConfigError, ContractError, ShapeError
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)

DECISION_THRESHOLD = 0.5


def threshold(proba: np.ndarray) -> np.ndarray:
    """Label 1 iff p > 0.5; exact ties go to label 0."""
    return (np.asarray(proba) > DECISION_THRESHOLD).astype(np.int64)


class Classifier:
    """
    Base class for binary classifiers over fused feature matrices.

    Subclasses implement `_fit`, `predict_proba` and the parameter
    (de)serialization hooks. `feature_std` holds the per-column std of the
    rows the model was fitted on; explanations perturb in those units.
    """

    family: str = ""
    needs_validation: bool = False
    transductive: bool = False

    def __init__(self, hyper, threads: int = 1):
        self.hyper = hyper
        self.threads = threads
        self.n_features: Optional[int] = None
        self.feature_std: Optional[np.ndarray] = None
        self.history: Dict[str, list] = {}

    @property
    def is_fitted(self) -> bool:
        return self.n_features is not None

    def fit(
        self,
        X: np.ndarray,
        y: np.ndarray,
        rng: RngStream,
        validation: Optional[Tuple[np.ndarray, np.ndarray]] = None,
        unlabeled: Optional[np.ndarray] = None,
    ) -> "Classifier":
        """
        Train on (X, y).

        Args:
            X: Training matrix (n, d)
            y: 0/1 labels
            rng: Stream owned by this fit
            validation: Optional (X_val, y_val) for early stopping
            unlabeled: Extra rows scored transductively (graph models only)

        Returns:
            self
        """
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ShapeError(f"X of shape {X.shape} does not match {y.size} labels")
        self._fit(X, y, rng, validation, unlabeled)
        self.n_features = X.shape[1]
        self.feature_std = X.std(axis=0)
        return self

    def _fit(self, X, y, rng, validation, unlabeled) -> None:
        raise NotImplementedError

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X: np.ndarray) -> np.ndarray:
        return threshold(self.predict_proba(X))

    def _check_input(self, X) -> np.ndarray:
        if not self.is_fitted:
            raise ContractError(f"{self.family} model used before fit")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def params_to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError

    def params_from_dict(self, data: Dict[str, Any]) -> None:
        raise NotImplementedError

    def describe(self) -> str:
        return f"{self.family}({self.hyper})"


def model_registry() -> Dict[str, type]:
    """Family name to Classifier subclass."""
    from src.models.conv1d import Conv1DClassifier
    from src.models.forest import RandomForestClassifier
    from src.models.gcn import GcnClassifier
    from src.models.logreg import LogRegClassifier

    return {
        "logreg": LogRegClassifier,
        "random_forest": RandomForestClassifier,
        "conv1d": Conv1DClassifier,
        "gcn": GcnClassifier,
    }


def create_model(family: str, hyper=None, threads: int = 1) -> Classifier:
    """
    Factory function to create the appropriate classifier.

    Args:
        family: One of logreg, random_forest, conv1d, gcn
        hyper: Hyperparameter block; the family default when None
        threads: Worker threads the fit may use (only the forest does)

    Returns:
        Unfitted Classifier
    """
    registry = model_registry()
    if family not in registry:
        raise ConfigError(f"unknown model family: {family}")
    cls = registry[family]
    return cls(hyper if hyper is not None else cls.default_hyper(), threads=threads)
