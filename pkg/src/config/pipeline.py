"""
Pipeline configuration schema.
"""
import json
import logging
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.errors import ConfigError

logger = logging.getLogger(__name__)

MODEL_FAMILIES = ("logreg", "random_forest", "conv1d", "gcn")
SPAN_NAMES = ("audio", "visual", "annotation")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FusionSettings(_Strict):
    audio_len: int = Field(60, ge=1)
    visual_len: int = Field(60, ge=1)


class SelectionSettings(_Strict):
    enabled: bool = False
    r_thresh: float = Field(0.05, ge=0.0, le=1.0)
    overlap_thresh: float = Field(0.95, ge=0.0, le=1.0)
    spans: List[Literal["audio", "visual", "annotation"]] = ["annotation"]


class LogRegHyper(_Strict):
    lr: float = Field(0.1, gt=0)
    epochs: int = Field(500, ge=0)
    l2: float = Field(1e-4, ge=0)


class ForestHyper(_Strict):
    n_trees: int = Field(100, ge=1)
    max_depth: int = Field(12, ge=1)
    min_leaf: int = Field(2, ge=1)
    mtry: Optional[int] = Field(None, ge=1)  # None means floor(sqrt(d))
    bootstrap: bool = True


class LayerConfig(_Strict):
    type: Literal["conv", "maxpool", "dropout", "dense", "relu", "sigmoid", "flatten"]
    out_ch: Optional[int] = Field(None, ge=1)
    kernel: Optional[int] = Field(None, ge=1)
    window: Optional[int] = Field(None, ge=1)
    rate: Optional[float] = Field(None, ge=0.0, lt=1.0)
    out: Optional[int] = Field(None, ge=1)


class Conv1DHyper(_Strict):
    lr: float = Field(0.01, gt=0)
    epochs: int = Field(60, ge=0)
    batch: int = Field(16, ge=1)
    patience: int = Field(10, ge=1)
    architecture: Optional[List[LayerConfig]] = None


class GcnHyper(_Strict):
    lr: float = Field(0.05, gt=0)
    epochs: int = Field(300, ge=0)
    k_neighbors: int = Field(8, ge=1)
    filter_width: int = Field(16, ge=1)
    hidden: int = Field(16, ge=1)


class ExplainSettings(_Strict):
    n_samples: int = Field(2, ge=0)
    n_perm: int = Field(50, ge=1)
    n_perturb: int = Field(1000, ge=1)
    k_top: int = Field(10, ge=1)
    background_size: int = Field(20, ge=1)
    n_repeats: int = Field(5, ge=0)  # permutation importance; 0 skips it


class PipelineConfig(_Strict):
    """Validated configuration for `veridict run`."""

    version: Literal[1] = 1
    seed: int = Field(42, ge=0, lt=2 ** 64)
    manifest: Optional[str] = None
    dataset: Optional[str] = None
    out_dir: str = "storage/results"
    k: int = Field(5, ge=2)
    threads: Optional[int] = Field(None, ge=1)
    models: List[Literal["logreg", "random_forest", "conv1d", "gcn"]] = list(MODEL_FAMILIES)
    no_annotations: bool = False
    val_fraction: float = Field(0.10, gt=0.0, lt=1.0)
    split_ratios: Tuple[float, float, float] = (0.70, 0.10, 0.20)
    fusion: FusionSettings = FusionSettings()
    selection: SelectionSettings = SelectionSettings()
    logreg: LogRegHyper = LogRegHyper()
    random_forest: ForestHyper = ForestHyper()
    conv1d: Conv1DHyper = Conv1DHyper()
    gcn: GcnHyper = GcnHyper()
    explain: ExplainSettings = ExplainSettings()

    @field_validator("models")
    @classmethod
    def _models_nonempty(cls, value):
        if not value:
            raise ValueError("at least one model family is required")
        return value

    @field_validator("split_ratios")
    @classmethod
    def _ratios_sum(cls, value):
        if any(r < 0 for r in value) or abs(sum(value) - 1.0) > 1e-9:
            raise ValueError("split ratios must be non-negative and sum to 1")
        return value

    @model_validator(mode="after")
    def _one_source(self):
        if self.manifest and self.dataset:
            raise ValueError("give either 'manifest' or 'dataset', not both")
        return self

    def hyper_for(self, family: str) -> BaseModel:
        """Hyperparameter block for a model family."""
        if family not in MODEL_FAMILIES:
            raise ConfigError(f"unknown model family: {family}")
        return getattr(self, family)


def load_pipeline_config(path, overrides: Optional[dict] = None) -> PipelineConfig:
    """
    Load and validate a pipeline config file.

    Args:
        path: JSON config path
        overrides: Top-level values that replace file values (CLI flags)

    Returns:
        Validated PipelineConfig

    Raises:
        ConfigError: On unreadable JSON or schema violations
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return build_pipeline_config(raw, overrides, base_dir=path.parent)


def build_pipeline_config(raw: dict, overrides: Optional[dict] = None, base_dir: Optional[Path] = None) -> PipelineConfig:
    """Validate a config dict; relative paths resolve against base_dir."""
    data = dict(raw)
    if "version" not in data:
        raise ConfigError("config is missing the 'version' field")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    try:
        config = PipelineConfig.model_validate(data)
    except ValidationError as e:
        messages = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ConfigError("invalid config: " + "; ".join(messages)) from e

    if base_dir is not None:
        updates = {}
        for key in ("manifest", "dataset", "out_dir"):
            value = getattr(config, key)
            if value and not Path(value).is_absolute() and key in raw:
                updates[key] = str(base_dir / value)
        if updates:
            config = config.model_copy(update=updates)
    logger.debug(f"Pipeline config: {config.model_dump()}")
    return config


HYPER_MODELS = {
    "logreg": LogRegHyper,
    "random_forest": ForestHyper,
    "conv1d": Conv1DHyper,
    "gcn": GcnHyper,
}
