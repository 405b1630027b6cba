"""
Versioned JSON model files.

    {"format": "veridict-model", "version": 1, "family": ..., "hyper": {...},
     "n_features": ..., "feature_std": [...], "spans": {...}, "params": {...}}

Floats are written with Python's shortest round-trip repr, so a saved and
reloaded model predicts bit-identically.
"""
import json
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.config.pipeline import HYPER_MODELS
from src.config.settings import MODEL_FORMAT
from src.errors import DataFormatError
from src.models.base import Classifier, create_model

logger = logging.getLogger(__name__)


def model_to_dict(model: Classifier, spans: Optional[Dict[str, Tuple[int, int]]] = None) -> dict:
    return {
        "format": MODEL_FORMAT["name"],
        "version": MODEL_FORMAT["version"],
        "family": model.family,
        "hyper": model.hyper.model_dump(),
        "n_features": model.n_features,
        "feature_std": None if model.feature_std is None else model.feature_std.tolist(),
        "spans": {name: list(span) for name, span in (spans or {}).items()},
        "params": model.params_to_dict(),
    }


def model_from_dict(data: dict) -> Classifier:
    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT["name"]:
        raise DataFormatError("not a veridict model file")
    if data.get("version") != MODEL_FORMAT["version"]:
        raise DataFormatError(f"unsupported model file version {data.get('version')!r}")
    family = data.get("family")
    hyper_cls = HYPER_MODELS.get(family)
    if hyper_cls is None:
        raise DataFormatError(f"unknown model family in file: {family!r}")
    model = create_model(family, hyper_cls.model_validate(data["hyper"]))
    model.params_from_dict(data["params"])
    model.n_features = int(data["n_features"])
    if data.get("feature_std") is not None:
        model.feature_std = np.array(data["feature_std"], dtype=np.float64)
    return model


def save_model(model: Classifier, path: Union[str, Path], spans: Optional[Dict[str, Tuple[int, int]]] = None) -> Path:
    """Write a fitted model as versioned JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model, spans), sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Saved {model.family} model to {path}")
    return path


def load_model(path: Union[str, Path]) -> Tuple[Classifier, Dict[str, Tuple[int, int]]]:
    """
    Read a model file.

    Returns:
        (model, span layout it was trained on)
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise DataFormatError(f"model file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise DataFormatError(f"model file is not valid JSON: {e}") from e
    model = model_from_dict(data)
    spans = {name: tuple(span) for name, span in data.get("spans", {}).items()}
    return model, spans
