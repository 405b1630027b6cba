"""
Feature scaling fitted on a training split.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from src.errors import ContractError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class Standardizer:
    """Per-column z-score; zero-variance columns keep a unit scale."""
    mean: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ShapeError(f"cannot fit a scaler on shape {X.shape}")
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale = np.where(std > 0.0, std, 1.0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.mean is None:
            raise ContractError("Standardizer used before fit")
        if X.shape[-1] != self.mean.size:
            raise ShapeError(f"expected {self.mean.size} features, got {X.shape[-1]}")
        return (X - self.mean) / self.scale

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean": None if self.mean is None else self.mean.tolist(),
            "scale": None if self.scale is None else self.scale.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Standardizer":
        return cls(
            mean=None if data.get("mean") is None else np.array(data["mean"], dtype=np.float64),
            scale=None if data.get("scale") is None else np.array(data["scale"], dtype=np.float64),
        )
