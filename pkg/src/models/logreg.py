"""
Logistic regression trained by full-batch gradient descent.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.config.pipeline import LogRegHyper
from src.errors import DivergenceError, ShapeError
from src.models.base import Classifier
from src.models.preprocessing import Standardizer
from src.utils.linalg import bce, sigmoid
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float = 0.0
    history: List[float] = field(default_factory=list)


def _objective(X, y, w, b, l2) -> float:
    return bce(y, sigmoid(X @ w + b)) + 0.5 * l2 * float(np.dot(w, w))


def logreg_fit(X, y, hyper: LogRegHyper = None, rng: Optional[RngStream] = None) -> LogRegModel:
    """
    Minimize mean BCE + (l2 / 2) * ||w||^2 by full-batch gradient descent.

    Parameters start at zero, so the fit is deterministic and `rng` is
    accepted only for interface symmetry.

    Returns:
        LogRegModel whose history holds the objective before every update
        and after the last one

    Raises:
        DivergenceError: If the objective or parameters become non-finite
    """
    hyper = hyper or LogRegHyper()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeError(f"X of shape {X.shape} does not match {y.size} labels")

    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    history = []

    with np.errstate(over="raise", invalid="raise"):
        for epoch in range(hyper.epochs + 1):
            try:
                loss = _objective(X, y, w, b, hyper.l2)
            except FloatingPointError as e:
                raise DivergenceError(epoch, hyper.lr, str(e)) from e
            if not np.isfinite(loss):
                raise DivergenceError(epoch, hyper.lr)
            history.append(loss)
            if epoch == hyper.epochs:
                break

            try:
                residual = sigmoid(X @ w + b) - y
                w = w - hyper.lr * (X.T @ residual / n + hyper.l2 * w)
                b = b - hyper.lr * float(residual.mean())
            except FloatingPointError as e:
                raise DivergenceError(epoch, hyper.lr, str(e)) from e
            if not (np.all(np.isfinite(w)) and np.isfinite(b)):
                raise DivergenceError(epoch, hyper.lr, "parameters became non-finite")

            if epoch % 100 == 0:
                logger.debug(f"logreg epoch {epoch}: loss {loss:.6f}")

    return LogRegModel(weights=w, bias=b, history=history)


def logreg_predict_proba(model: LogRegModel, x) -> np.ndarray:
    """sigma(w . x + b) for one vector or each row of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.weights.size:
        raise ShapeError(f"expected {model.weights.size} features, got {x.shape[-1]}")
    return sigmoid(x @ model.weights + model.bias)


class LogRegClassifier(Classifier):
    """Standardized logistic regression."""

    family = "logreg"

    def __init__(self, hyper: LogRegHyper, threads: int = 1):
        super().__init__(hyper, threads)
        self.scaler = Standardizer()
        self.model: Optional[LogRegModel] = None

    @staticmethod
    def default_hyper() -> LogRegHyper:
        return LogRegHyper()

    def _fit(self, X, y, rng, validation, unlabeled) -> None:
        self.model = logreg_fit(self.scaler.fit_transform(X), y, self.hyper, rng)
        self.history = {"train_loss": list(self.model.history)}
        logger.debug(f"logreg: loss {self.model.history[0]:.4f} -> {self.model.history[-1]:.4f}")

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_input(X)
        return logreg_predict_proba(self.model, self.scaler.transform(X))

    def params_to_dict(self) -> Dict[str, Any]:
        return {
            "scaler": self.scaler.to_dict(),
            "weights": self.model.weights.tolist(),
            "bias": self.model.bias,
            "history": list(self.model.history),
        }

    def params_from_dict(self, data: Dict[str, Any]) -> None:
        self.scaler = Standardizer.from_dict(data["scaler"])
        self.model = LogRegModel(
            weights=np.array(data["weights"], dtype=np.float64),
            bias=float(data["bias"]),
            history=list(data.get("history", [])),
        )
        self.n_features = self.model.weights.size
