"""
Class balancing and deterministic stratified splitting.

Everything here works on label vectors and returns index arrays; the
sample-level wrappers keep the original sample order inside each part.
"""
import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.errors import ValidationError
from src.ingest.dataset import SPLIT_NAMES, Sample
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.70, 0.10, 0.20)


def _labels(samples: Sequence[Sample]) -> np.ndarray:
    return np.array([s.label for s in samples], dtype=np.int64)


def _class_indices(y: np.ndarray) -> List[np.ndarray]:
    return [np.flatnonzero(y == label) for label in (0, 1)]


def allocate(n: int, ratios: Sequence[float]) -> List[int]:
    """
    Split n items by ratios: floors first, leftovers to the largest remainders.

    Ties in the remainder go to the earlier part.
    """
    exact = [n * r for r in ratios]
    counts = [int(np.floor(e + 1e-9)) for e in exact]
    leftover = n - sum(counts)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def balance_indices(y, rng: RngStream) -> np.ndarray:
    """Indices kept after down-sampling the majority class to the minority count."""
    y = np.asarray(y)
    groups = _class_indices(y)
    if any(g.size == 0 for g in groups):
        raise ValidationError("balancing needs both classes present")
    minority = min(g.size for g in groups)
    keep = []
    for group in groups:
        if group.size > minority:
            chosen = group[rng.choice(group.size, minority)]
            logger.info(f"Balancing: dropped {group.size - minority} samples of label {int(y[group[0]])}")
            keep.append(chosen)
        else:
            keep.append(group)
    return np.sort(np.concatenate(keep))


def balance_classes(samples: Sequence[Sample], rng: RngStream) -> List[Sample]:
    """Down-sample the majority class without replacement; order otherwise preserved."""
    return [samples[i] for i in balance_indices(_labels(samples), rng)]


def split_indices(y, ratios: Sequence[float] = DEFAULT_RATIOS, rng: RngStream = None) -> List[np.ndarray]:
    """
    Stratified partition of indices by ratios.

    Returns:
        One sorted index array per ratio
    """
    y = np.asarray(y)
    if abs(sum(ratios) - 1.0) > 1e-9 or any(r < 0 for r in ratios):
        raise ValidationError(f"split ratios must be non-negative and sum to 1, got {tuple(ratios)}")
    rng = rng if rng is not None else RngStream(0)
    parts: List[List[int]] = [[] for _ in ratios]
    for group in _class_indices(y):
        shuffled = group[rng.permutation(group.size)]
        start = 0
        for part, count in zip(parts, allocate(group.size, ratios)):
            part.extend(shuffled[start:start + count].tolist())
            start += count
    return [np.array(sorted(p), dtype=np.int64) for p in parts]


def split_dataset(
    samples: Sequence[Sample],
    ratios: Sequence[float] = DEFAULT_RATIOS,
    rng: RngStream = None,
) -> Dict[str, List[Sample]]:
    """Stratified train/val/test split."""
    y = _labels(samples)
    for label, group in enumerate(_class_indices(y)):
        if group.size < 3:
            raise ValidationError(f"label {label} has {group.size} samples; a three-way split needs at least 3")
    parts = split_indices(y, ratios, rng)
    result = {name: [samples[i] for i in idx] for name, idx in zip(SPLIT_NAMES, parts)}
    logger.info("Split sizes: " + ", ".join(f"{name}={len(part)}" for name, part in result.items()))
    return result


def kfold_indices(y, k: int = 5, rng: RngStream = None) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Stratified k-fold (train, test) index pairs.

    Per-class shuffled index lists are concatenated; position p of the
    concatenation goes to test fold p mod k.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValidationError(f"k must be at least 2, got {k}")
    groups = _class_indices(y)
    smallest = min(g.size for g in groups)
    if k > smallest:
        raise ValidationError(f"k={k} exceeds the smallest class count {smallest}")
    rng = rng if rng is not None else RngStream(0)

    order = np.concatenate([g[rng.permutation(g.size)] for g in groups])
    fold_of = np.empty(y.size, dtype=np.int64)
    fold_of[order] = np.arange(order.size) % k

    all_idx = np.arange(y.size)
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)]


def kfold_partitions(samples: Sequence[Sample], k: int = 5, rng: RngStream = None) -> List[Tuple[List[Sample], List[Sample]]]:
    """Sample-level stratified k-fold."""
    return [
        ([samples[i] for i in train], [samples[i] for i in test])
        for train, test in kfold_indices(_labels(samples), k, rng)
    ]


def carve_validation(y, fraction: float, rng: RngStream) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stratified (train, val) carve-out of a training part.

    Every class with at least two members contributes one or more validation rows.
    """
    y = np.asarray(y)
    train, val = [], []
    for group in _class_indices(y):
        shuffled = group[rng.permutation(group.size)]
        n_val = allocate(group.size, (1.0 - fraction, fraction))[1]
        if group.size >= 2:
            n_val = min(max(n_val, 1), group.size - 1)
        val.extend(shuffled[:n_val].tolist())
        train.extend(shuffled[n_val:].tolist())
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(val), dtype=np.int64)
