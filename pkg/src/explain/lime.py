"""
Local explanations from a weighted linear surrogate fitted around one instance.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.errors import ShapeError, ValidationError
from src.explain.shapley import as_model_fn, modality_rollup
from src.ingest.dataset import span_of_index
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)

RIDGE_LAMBDA = 1e-3
R2_UNDEFINED_TOL = 1e-20


@dataclass(frozen=True)
class Attribution:
    feature: int
    value: float
    span: str = ""

    def to_dict(self) -> dict:
        return {"feature": self.feature, "span": self.span, "value": self.value}


@dataclass
class LocalExplanation:
    id: str
    p: float
    attributions: List[Attribution]
    r2: float
    coefficients: np.ndarray = field(repr=False, default=None)
    r2_defined: bool = True
    rollup: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = {
            "id": self.id,
            "p": self.p,
            "attributions": [a.to_dict() for a in self.attributions],
            "r2": self.r2,
            "r2_defined": self.r2_defined,
        }
        if self.rollup:
            data["rollup"] = self.rollup
        return data

    def write_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def weighted_ridge(A: np.ndarray, f: np.ndarray, w: np.ndarray, lam: float = RIDGE_LAMBDA) -> Tuple[float, np.ndarray]:
    """Minimize sum w (f - b - A c)^2 + lam |c|^2; the intercept b is not penalized."""
    n, d = A.shape
    design = np.hstack([np.ones((n, 1)), A])
    weighted = design * w[:, None]
    gram = design.T @ weighted
    penalty = np.full(d + 1, lam)
    penalty[0] = 0.0
    gram[np.diag_indices_from(gram)] += penalty
    beta = np.linalg.solve(gram, weighted.T @ f)
    return float(beta[0]), beta[1:]


def has_weighted_variance(f: np.ndarray, w: np.ndarray) -> bool:
    """False when the model outputs are flat under the kernel weights, leaving R^2 undefined."""
    total = np.sum(w)
    mean = np.sum(w * f) / total
    return bool(np.sum(w * (f - mean) ** 2) > R2_UNDEFINED_TOL * total)


def weighted_r2(f: np.ndarray, fitted: np.ndarray, w: np.ndarray) -> float:
    """Weighted coefficient of determination clipped to [0, 1]; 0 when f has no weighted variance."""
    if not has_weighted_variance(f, w):
        return 0.0
    mean = np.sum(w * f) / np.sum(w)
    ss_tot = np.sum(w * (f - mean) ** 2)
    ss_res = np.sum(w * (f - fitted) ** 2)
    return float(min(1.0, max(0.0, 1.0 - ss_res / ss_tot)))


def lime_explain(
    model,
    x,
    scale_std,
    n_perturb: int = 1000,
    kernel_width: Optional[float] = None,
    k_top: int = 10,
    rng: Optional[RngStream] = None,
    instance_id: str = "",
    spans: Optional[Dict[str, Tuple[int, int]]] = None,
) -> LocalExplanation:
    """
    Explain one prediction with a locally weighted linear model.

    Perturbations are Gaussian in standardized units (per-feature training
    std), so surrogate coefficients are in "probability per std" units.

    Args:
        model: Classifier or callable mapping rows to probabilities
        x: Instance to explain (d,)
        scale_std: Per-feature training std; zeros are treated as 1
        n_perturb: Number of perturbed samples (the instance itself is added)
        kernel_width: Exponential kernel width; 0.75 * sqrt(d) when None
        k_top: Attributions to report, clamped to d
        rng: Random stream
        instance_id: Identifier echoed in the explanation
        spans: Span layout for labelling attributions and the modality rollup

    Returns:
        LocalExplanation with attributions sorted by |value| descending
    """
    model_fn = as_model_fn(model)
    rng = rng or RngStream(0)
    x = np.asarray(x, dtype=np.float64).ravel()
    d = x.size
    if d < 1:
        raise ShapeError("cannot explain an instance with no features")
    if n_perturb < 1:
        raise ValidationError("n_perturb must be at least 1")
    scale = np.asarray(scale_std, dtype=np.float64).ravel()
    if scale.size != d:
        raise ShapeError(f"scale has {scale.size} entries, instance has {d}")
    scale = np.where(scale > 0, scale, 1.0)
    width = kernel_width if kernel_width is not None else 0.75 * math.sqrt(d)
    if width <= 0:
        raise ValidationError("kernel width must be positive")

    Z = np.vstack([np.zeros((1, d)), rng.normal((n_perturb, d))])
    f = np.asarray(model_fn(x + Z * scale), dtype=np.float64).ravel()
    dist2 = np.sum(Z ** 2, axis=1)
    w = np.exp(-dist2 / width ** 2)

    intercept, coef = weighted_ridge(Z, f, w)
    r2 = weighted_r2(f, intercept + Z @ coef, w)
    r2_defined = has_weighted_variance(f, w)
    if not r2_defined:
        logger.info(f"Model output is flat around {instance_id or 'instance'}; R^2 reported as 0")

    k = min(k_top, d)
    top = np.argsort(-np.abs(coef), kind="stable")[:k]
    attributions = [
        Attribution(int(j), float(coef[j]), span_of_index(spans, int(j)) if spans else "") for j in top
    ]
    rollup = modality_rollup(coef, spans) if spans else {}
    logger.debug(f"LIME for {instance_id or 'instance'}: p={f[0]:.4f}, r2={r2:.4f}")
    return LocalExplanation(
        id=instance_id, p=float(f[0]), attributions=attributions, r2=r2, coefficients=coef,
        r2_defined=r2_defined, rollup=rollup,
    )
