"""
Sample and feature-vector types plus their on-disk formats.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.errors import DataFormatError, ShapeError, ValidationError

logger = logging.getLogger(__name__)

SPAN_ORDER = ("audio", "visual", "annotation")
LABELS = {"truthful": 0, "deceptive": 1}
LABEL_NAMES = {value: key for key, value in LABELS.items()}
SPLIT_NAMES = ("train", "val", "test")

Span = Tuple[int, int]


@dataclass(frozen=True)
class FeatureVector:
    """Dense vector with labeled modality spans."""
    values: np.ndarray
    spans: Dict[str, Span] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ShapeError(f"feature vector must be 1-D, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        spans = {name: (int(s[0]), int(s[1])) for name, s in self.spans.items()}
        object.__setattr__(self, "spans", spans)
        validate_spans(spans, values.size)

    def __len__(self) -> int:
        return self.values.size

    def span(self, name: str) -> np.ndarray:
        start, end = self.spans[name]
        return self.values[start:end]


def validate_spans(spans: Dict[str, Span], length: int) -> None:
    """Spans must be ordered audio -> visual -> annotation, disjoint and covering."""
    unknown = set(spans) - set(SPAN_ORDER)
    if unknown:
        raise ValidationError(f"unknown span names: {sorted(unknown)}")
    cursor = 0
    for name in SPAN_ORDER:
        if name not in spans:
            continue
        start, end = spans[name]
        if start != cursor or end < start:
            raise ValidationError(f"span {name}={spans[name]} is not contiguous at {cursor}")
        cursor = end
    if spans and cursor != length:
        raise ValidationError(f"spans cover {cursor} of {length} values")


def span_of_index(spans: Dict[str, Span], index: int) -> str:
    """Name of the span holding a feature index."""
    for name, (start, end) in spans.items():
        if start <= index < end:
            return name
    raise ShapeError(f"feature index {index} lies outside every span")


@dataclass(frozen=True)
class Sample:
    """One labeled testimony: 0 = truthful, 1 = deceptive."""
    id: str
    label: int
    features: FeatureVector

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValidationError(f"sample {self.id}: label must be 0 or 1, got {self.label}")


def dataset_spans(samples: Sequence[Sample]) -> Dict[str, Span]:
    """Shared span layout of a sample list."""
    if not samples:
        raise ValidationError("empty sample list")
    spans = samples[0].features.spans
    length = len(samples[0].features)
    for sample in samples[1:]:
        if len(sample.features) != length or sample.features.spans != spans:
            raise ShapeError(f"sample {sample.id} has a different fused layout")
    return dict(spans)


def stack_samples(samples: Sequence[Sample]) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    """Feature matrix, label vector and ids of a sample list."""
    dataset_spans(samples)
    X = np.vstack([s.features.values for s in samples])
    y = np.array([s.label for s in samples], dtype=np.int64)
    return X, y, [s.id for s in samples]


def label_counts(samples: Iterable[Sample]) -> Dict[str, int]:
    counts = {name: 0 for name in LABELS}
    for sample in samples:
        counts[LABEL_NAMES[sample.label]] += 1
    return counts


def zero_span(samples: Sequence[Sample], span: str) -> List[Sample]:
    """Copy of the samples with one span's values set to zero."""
    result = []
    for sample in samples:
        values = sample.features.values.copy()
        if span in sample.features.spans:
            start, end = sample.features.spans[span]
            values[start:end] = 0.0
        result.append(Sample(sample.id, sample.label, FeatureVector(values, sample.features.spans)))
    return result


def feature_columns(length: int) -> List[str]:
    return [f"f{i}" for i in range(length)]


def read_feature_csv(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """
    Read a feature CSV with header `id,f0,f1,...`.

    Returns:
        Mapping of id to feature vector
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={"id": str}, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataFormatError(f"unreadable feature CSV {path}: {e}") from e
    if frame.columns.size < 2 or frame.columns[0] != "id":
        raise DataFormatError(f"feature CSV {path} must start with an 'id' column")
    expected = feature_columns(frame.columns.size - 1)
    if list(frame.columns[1:]) != expected:
        raise DataFormatError(f"feature CSV {path} columns must be f0..f{len(expected) - 1}")
    if frame["id"].duplicated().any():
        raise DataFormatError(f"feature CSV {path} repeats ids")
    values = frame[expected].to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DataFormatError(f"feature CSV {path} holds non-finite values")
    return {row_id: values[i] for i, row_id in enumerate(frame["id"])}


def write_feature_csv(rows: Dict[str, np.ndarray], path: Union[str, Path]) -> Path:
    """Write vectors of equal length as a feature CSV, ids in insertion order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ids = list(rows)
    matrix = np.vstack([np.asarray(rows[i], dtype=np.float64) for i in ids]) if ids else np.zeros((0, 0))
    frame = pd.DataFrame(matrix, columns=feature_columns(matrix.shape[1]))
    frame.insert(0, "id", ids)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def write_dataset(samples: Sequence[Sample], path: Union[str, Path]) -> Path:
    """
    Write a fused dataset as `<name>.csv` (`id,label,f0..`) plus `<name>.spans.json`.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    X, y, ids = stack_samples(samples)
    frame = pd.DataFrame(X, columns=feature_columns(X.shape[1]))
    frame.insert(0, "label", y)
    frame.insert(0, "id", ids)
    frame.to_csv(path, index=False, lineterminator="\n")

    spans = dataset_spans(samples)
    spans_path = path.with_suffix(".spans.json")
    spans_path.write_text(json.dumps({k: list(v) for k, v in spans.items()}, indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote {len(samples)} samples x {X.shape[1]} features to {path}")
    return path


def read_dataset(path: Union[str, Path]) -> List[Sample]:
    """Read a dataset written by write_dataset."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"dataset not found: {path}")
    try:
        frame = pd.read_csv(path, dtype={"id": str}, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataFormatError(f"unreadable dataset {path}: {e}") from e
    if list(frame.columns[:2]) != ["id", "label"]:
        raise DataFormatError(f"dataset {path} must start with 'id,label'")

    spans_path = path.with_suffix(".spans.json")
    if spans_path.exists():
        spans = {k: tuple(v) for k, v in json.loads(spans_path.read_text(encoding="utf-8")).items()}
    else:
        spans = {}

    columns = feature_columns(frame.columns.size - 2)
    if list(frame.columns[2:]) != columns:
        raise DataFormatError(f"dataset {path} feature columns must be f0..f{len(columns) - 1}")
    values = frame[columns].to_numpy(dtype=np.float64)
    labels = frame["label"].to_numpy()
    return [
        Sample(str(row_id), int(labels[i]), FeatureVector(values[i], spans))
        for i, row_id in enumerate(frame["id"])
    ]


def write_split_files(split: Dict[str, Sequence[Sample]], out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write train.txt / val.txt / test.txt with one id per line."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name in SPLIT_NAMES:
        part = split.get(name, [])
        path = out_dir / f"{name}.txt"
        path.write_text("".join(f"{s.id}\n" for s in part), encoding="utf-8")
        paths[name] = path
    return paths


def read_split_files(split_dir: Union[str, Path]) -> Dict[str, List[str]]:
    """Read the ids listed in the split files that exist."""
    split_dir = Path(split_dir)
    result = {}
    for name in SPLIT_NAMES:
        path = split_dir / f"{name}.txt"
        if path.exists():
            result[name] = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    return result


def select_ids(samples: Sequence[Sample], ids: Sequence[str]) -> List[Sample]:
    """Samples whose ids are listed, in list order."""
    by_id = {s.id: s for s in samples}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise ValidationError(f"unknown sample ids: {missing[:5]}")
    return [by_id[i] for i in ids]
