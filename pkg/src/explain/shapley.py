"""
Monte-Carlo Shapley attributions by permutation sampling.

For each sampled permutation a background row is drawn and features are
switched from the background value to the explained instance's value in
permutation order; the change in predicted probability at each switch is
credited to the switched feature.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.errors import ShapeError, ValidationError
from src.ingest.dataset import span_of_index
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)

ModelFn = Callable[[np.ndarray], np.ndarray]

PERM_BLOCK = 16


def as_model_fn(model) -> ModelFn:
    """A fitted Classifier or a bare callable, as a probability function."""
    if hasattr(model, "predict_proba"):
        return model.predict_proba
    if callable(model):
        return model
    raise TypeError(f"cannot explain object of type {type(model).__name__}")


def _switch_batch(x: np.ndarray, base: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Rows 0..d: background row with the first j features of `order` taken from x."""
    d = x.size
    rows = np.repeat(base[None, :], d + 1, axis=0)
    steps = np.tril(np.ones((d, d), dtype=bool))
    switched = np.zeros((d + 1, d), dtype=bool)
    switched[1:, order] = steps
    rows[switched] = np.broadcast_to(x, (d + 1, d))[switched]
    return rows


def shapley_sample(model, x, background, n_perm: int = 200, rng: Optional[RngStream] = None) -> np.ndarray:
    """
    Estimate Shapley values of one instance.

    Args:
        model: Classifier or callable mapping (n, d) rows to probabilities
        x: Instance to explain (d,)
        background: Reference rows (b, d)
        n_perm: Number of sampled permutations
        rng: Random stream

    Returns:
        Attribution per feature; positive values push toward deceptive

    Raises:
        ValidationError: If the background set is empty
    """
    model_fn = as_model_fn(model)
    rng = rng or RngStream(0)
    x = np.asarray(x, dtype=np.float64).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    if background.shape[0] == 0 or background.size == 0:
        raise ValidationError("Shapley sampling needs a non-empty background set")
    if background.shape[1] != x.size:
        raise ShapeError(f"background has {background.shape[1]} features, instance has {x.size}")
    if n_perm < 1:
        raise ValidationError("n_perm must be at least 1")

    d = x.size
    phi = np.zeros(d)
    orders = [rng.permutation(d) for _ in range(n_perm)]
    picks = rng.integers(background.shape[0], n_perm)

    for start in range(0, n_perm, PERM_BLOCK):
        block = range(start, min(start + PERM_BLOCK, n_perm))
        batch = np.vstack([_switch_batch(x, background[picks[t]], orders[t]) for t in block])
        preds = np.asarray(model_fn(batch), dtype=np.float64).reshape(len(block), d + 1)
        for row, t in zip(preds, block):
            phi[orders[t]] += np.diff(row)
    return phi / n_perm


def modality_rollup(attributions, spans: Dict[str, Tuple[int, int]]) -> Dict[str, float]:
    """Sum attributions per modality span."""
    attributions = np.asarray(attributions, dtype=np.float64)
    return {name: float(np.sum(attributions[start:end])) for name, (start, end) in spans.items()}


@dataclass
class ShapleySummary:
    """Per-instance attribution matrix with feature rankings."""
    ids: List[str]
    values: np.ndarray
    spans: Dict[str, Tuple[int, int]]

    @property
    def mean_abs(self) -> np.ndarray:
        return np.mean(np.abs(self.values), axis=0)

    def ranking(self) -> np.ndarray:
        """Feature indices by mean |attribution|, most significant first."""
        return np.argsort(-self.mean_abs, kind="stable")

    def most_significant(self, n: int = 10) -> List[int]:
        return [int(i) for i in self.ranking()[:n]]

    def least_significant(self, n: int = 10) -> List[int]:
        return [int(i) for i in self.ranking()[::-1][:n]]

    def to_frame(self) -> pd.DataFrame:
        """Long form: one row per (instance, feature)."""
        n, d = self.values.shape
        spans = [span_of_index(self.spans, j) if self.spans else "" for j in range(d)]
        return pd.DataFrame({
            "id": np.repeat(self.ids, d),
            "feature": np.tile(np.arange(d), n),
            "span": np.tile(spans, n),
            "value": self.values.ravel(),
        })

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path


def shapley_summary(
    model,
    X,
    ids: Sequence[str],
    background,
    n_perm: int = 50,
    rng: Optional[RngStream] = None,
    spans: Optional[Dict[str, Tuple[int, int]]] = None,
) -> ShapleySummary:
    """Shapley values for every row of X; row i uses rng.spawn(i)."""
    rng = rng or RngStream(0)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if len(ids) != X.shape[0]:
        raise ShapeError(f"{len(ids)} ids for {X.shape[0]} rows")
    values = np.vstack([shapley_sample(model, X[i], background, n_perm, rng.spawn(i)) for i in range(X.shape[0])])
    logger.info(f"Computed Shapley values for {X.shape[0]} instance(s) with {n_perm} permutations each")
    return ShapleySummary(ids=list(ids), values=values, spans=dict(spans or {}))
