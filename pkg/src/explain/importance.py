"""
Permutation feature importance.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.errors import ShapeError, ValidationError
from src.explain.shapley import as_model_fn
from src.ingest.dataset import span_of_index
from src.models.base import threshold
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)


@dataclass
class ImportanceResult:
    baseline: float
    mean_drop: np.ndarray
    std_drop: np.ndarray

    def ranking(self) -> np.ndarray:
        return np.argsort(-self.mean_drop, kind="stable")

    def to_frame(self, spans: Optional[Dict[str, Tuple[int, int]]] = None) -> pd.DataFrame:
        d = self.mean_drop.size
        return pd.DataFrame({
            "feature": np.arange(d),
            "span": [span_of_index(spans, j) if spans else "" for j in range(d)],
            "mean_drop": self.mean_drop,
            "std_drop": self.std_drop,
        })

    def write_csv(self, path: Union[str, Path], spans: Optional[Dict[str, Tuple[int, int]]] = None) -> Path:
        """Per-feature drops as CSV `feature,span,mean_drop,std_drop`."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame(spans).to_csv(path, index=False, float_format="%.17g")
        return path


def permutation_importance(model, X, y, repeats: int = 10, rng: Optional[RngStream] = None) -> ImportanceResult:
    """
    Accuracy drop when each column is shuffled, averaged over repeats.

    Column j uses rng.spawn(j), so results do not depend on column order.
    """
    if repeats < 1:
        raise ValidationError("repeats must be at least 1")
    model_fn = as_model_fn(model)
    rng = rng or RngStream(0)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y).ravel()
    n, d = X.shape
    if n == 0:
        raise ValidationError("permutation importance needs at least one row")
    if y.size != n:
        raise ShapeError(f"{y.size} labels for {n} rows")

    baseline = float(np.mean(threshold(model_fn(X)) == y))
    drops = np.zeros((d, repeats))
    for j in range(d):
        stream = rng.spawn(j)
        shuffled = X.copy()
        for r in range(repeats):
            shuffled[:, j] = X[stream.permutation(n), j]
            drops[j, r] = baseline - float(np.mean(threshold(model_fn(shuffled)) == y))
    logger.info(f"Permutation importance over {d} features, {repeats} repeats, baseline accuracy {baseline:.4f}")
    return ImportanceResult(baseline=baseline, mean_drop=drops.mean(axis=1), std_drop=drops.std(axis=1))
