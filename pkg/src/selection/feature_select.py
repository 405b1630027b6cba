"""
Correlation and KDE-overlap feature screening.

A feature is dropped only when it is both uncorrelated with the label
(|r| < r_thresh) and its class-conditional densities are nearly identical
(overlap > overlap_thresh).
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.errors import ShapeError, ValidationError
from src.ingest.dataset import FeatureVector, Sample, stack_samples

logger = logging.getLogger(__name__)

KDE_GRID = 512
BANDWIDTH_FLOOR = 1e-6


@dataclass(frozen=True)
class SelectionMask:
    keep: np.ndarray           # bool per feature
    pearson_r: np.ndarray
    constant: np.ndarray       # bool, r undefined
    kde_overlap: np.ndarray

    @property
    def n_kept(self) -> int:
        return int(self.keep.sum())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "feature": np.arange(self.keep.size),
            "pearson_r": self.pearson_r,
            "kde_overlap": self.kde_overlap,
            "kept": self.keep.astype(int),
        })

    def write_csv(self, path: Union[str, Path]) -> Path:
        """Stats as CSV `feature,pearson_r,kde_overlap,kept`."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator="\n")
        return path


def pearson(x, y) -> Tuple[float, bool]:
    """
    Pearson correlation of x against y.

    Returns:
        (r, constant): r is 0.0 and constant is True when either input has
        zero variance
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ShapeError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValidationError("correlation needs at least 2 values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = np.dot(dx, dx)
    syy = np.dot(dy, dy)
    if sxx == 0.0 or syy == 0.0:
        return 0.0, True
    r = np.dot(dx, dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0)), False


def silverman_bandwidth(values) -> float:
    """h = 0.9 * min(std, IQR / 1.34) * n^(-1/5), floored at 1e-6."""
    values = np.asarray(values, dtype=np.float64)
    sigma = values.std(ddof=1) if values.size > 1 else 0.0
    q75, q25 = np.percentile(values, [75, 25])
    iqr = (q75 - q25) / 1.34
    spread = min(sigma, iqr) if iqr > 0 else sigma
    return max(0.9 * spread * values.size ** (-0.2), BANDWIDTH_FLOOR)


def _gaussian_kde(values: np.ndarray, h: float, grid: np.ndarray) -> np.ndarray:
    z = (grid[:, None] - values[None, :]) / h
    return np.exp(-0.5 * z * z).sum(axis=1) / (values.size * h * np.sqrt(2.0 * np.pi))


def kde_curves(a, b, grid_size: int = KDE_GRID) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Class-conditional Gaussian KDEs on a shared grid.

    The grid spans [min - 3h, max + 3h] over both classes, h being the larger bandwidth.

    Returns:
        (grid, density of a, density of b)
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size < 2 or b.size < 2:
        raise ValidationError("each class needs at least 2 values for a density estimate")
    ha = silverman_bandwidth(a)
    hb = silverman_bandwidth(b)
    h = max(ha, hb)
    lo = min(a.min(), b.min()) - 3.0 * h
    hi = max(a.max(), b.max()) + 3.0 * h
    grid = np.linspace(lo, hi, grid_size)
    return grid, _gaussian_kde(a, ha, grid), _gaussian_kde(b, hb, grid)


def kde_overlap(a, b, grid_size: int = KDE_GRID) -> float:
    """Overlap coefficient sum(min(p0, p1)) * step of the two class KDEs, in [0, 1]."""
    grid, pa, pb = kde_curves(a, b, grid_size)
    step = grid[1] - grid[0]
    return float(np.clip(np.minimum(pa, pb).sum() * step, 0.0, 1.0))


def write_kde_curves(a, b, path: Union[str, Path]) -> Path:
    """KDE plot data as CSV `x,truthful,deceptive`."""
    grid, pa, pb = kde_curves(a, b)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"x": grid, "truthful": pa, "deceptive": pb}).to_csv(path, index=False, lineterminator="\n")
    return path


def _span_columns(spans: Dict[str, Tuple[int, int]], names: Optional[Sequence[str]], d: int) -> np.ndarray:
    if names is None or not spans:
        return np.ones(d, dtype=bool)
    eligible = np.zeros(d, dtype=bool)
    for name in names:
        if name in spans:
            start, end = spans[name]
            eligible[start:end] = True
    return eligible


def select_features(
    X,
    y,
    r_thresh: float = 0.05,
    overlap_thresh: float = 0.95,
    spans: Optional[Dict[str, Tuple[int, int]]] = None,
    span_names: Optional[Sequence[str]] = None,
) -> SelectionMask:
    """
    Screen features by label correlation and class-density overlap.

    Args:
        X: Feature matrix (n, d)
        y: 0/1 labels
        r_thresh: Minimum |r| that keeps a feature on its own
        overlap_thresh: Overlap above which class densities count as identical
        spans: Span layout of the columns
        span_names: Restrict screening to these spans; other columns are kept

    Returns:
        SelectionMask with per-feature statistics
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeError(f"X of shape {X.shape} does not match {y.size} labels")
    if np.unique(y).size < 2:
        raise ValidationError("feature selection needs both classes")

    d = X.shape[1]
    r = np.zeros(d)
    constant = np.zeros(d, dtype=bool)
    overlap = np.zeros(d)
    for j in range(d):
        r[j], constant[j] = pearson(X[:, j], y)
        overlap[j] = kde_overlap(X[y == 0, j], X[y == 1, j])

    eligible = _span_columns(spans or {}, span_names, d)
    drop = eligible & (np.abs(r) < r_thresh) & (overlap > overlap_thresh)
    mask = SelectionMask(keep=~drop, pearson_r=r, constant=constant, kde_overlap=overlap)
    logger.info(f"Feature selection kept {mask.n_kept} of {d} features")
    return mask


def select_sample_features(samples: Sequence[Sample], settings) -> SelectionMask:
    """select_features driven by a SelectionSettings block."""
    X, y, _ = stack_samples(samples)
    return select_features(
        X, y,
        r_thresh=settings.r_thresh,
        overlap_thresh=settings.overlap_thresh,
        spans=samples[0].features.spans,
        span_names=settings.spans,
    )


def mask_spans(spans: Dict[str, Tuple[int, int]], keep: np.ndarray) -> Dict[str, Tuple[int, int]]:
    """Span layout after dropping the columns where keep is False."""
    new_spans = {}
    cursor = 0
    for name, (start, end) in spans.items():
        width = int(keep[start:end].sum())
        new_spans[name] = (cursor, cursor + width)
        cursor += width
    return new_spans


def apply_mask(samples: Sequence[Sample], keep) -> List[Sample]:
    """Drop masked columns from every sample and recompute spans."""
    keep = np.asarray(keep.keep if isinstance(keep, SelectionMask) else keep, dtype=bool)
    spans = mask_spans(samples[0].features.spans, keep) if samples else {}
    return [
        Sample(s.id, s.label, FeatureVector(s.features.values[keep], spans))
        for s in samples
    ]


def correlation_matrix(X, y, names: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Pearson matrix over the columns plus the label (heatmap data).

    Constant columns correlate 0 with everything but themselves.
    """
    X = np.asarray(X, dtype=np.float64)
    names = list(names) if names is not None else [f"f{j}" for j in range(X.shape[1])]
    data = np.column_stack([X, np.asarray(y, dtype=np.float64)])
    columns = names + ["label"]
    k = data.shape[1]
    matrix = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            matrix[i, j] = matrix[j, i] = pearson(data[:, i], data[:, j])[0]
    return pd.DataFrame(matrix, index=columns, columns=columns)
