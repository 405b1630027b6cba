"""
Cross-validated training and evaluation of model families.

Random streams are derived from a single seed:

    root.spawn(0)       fold partition (shared by every model)
    root.spawn(i + 1)   fold i: .spawn(0) validation carve, .spawn(1) model fit

so results do not depend on which model runs first or on the thread count.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from src.errors import FoldError, ValidationError, VeridictError
from src.evaluation.metrics import (
    ClassificationReport,
    FoldReport,
    classification_report,
    confusion,
    summarize_folds,
)
from src.ingest.dataset import Sample, stack_samples
from src.ingest.splits import DEFAULT_RATIOS, carve_validation, kfold_indices, split_indices
from src.models.base import Classifier, create_model, threshold
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)


@dataclass
class ModelSpec:
    """A model family plus its hyperparameters and the threads one fit may use."""
    family: str
    hyper: Any = None
    name: Optional[str] = None
    threads: int = 1
    factory: Optional[Callable[[], Classifier]] = field(default=None, repr=False)

    @property
    def label(self) -> str:
        return self.name or self.family

    def build(self) -> Classifier:
        if self.factory is not None:
            return self.factory()
        return create_model(self.family, self.hyper, threads=self.threads)


def specs_from_config(config) -> List[ModelSpec]:
    """One ModelSpec per family listed in a PipelineConfig."""
    return [ModelSpec(family, config.hyper_for(family)) for family in config.models]


@dataclass
class FoldResult:
    fold: int
    accuracy: float
    report: ClassificationReport
    test_ids: List[str]
    probabilities: List[float]
    model: Optional[Classifier] = field(default=None, repr=False)


def fit_and_score(
    spec: ModelSpec,
    X: np.ndarray,
    y: np.ndarray,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    rng: RngStream,
    val_fraction: float = 0.10,
    val_idx: Optional[np.ndarray] = None,
) -> Dict[str, Any]:
    """
    Train a fresh model on train_idx and score test_idx.

    Early-stopping models get a stratified validation carve-out from the
    training part unless val_idx is given.
    """
    model = spec.build()
    fit_idx = train_idx
    validation = None
    if model.needs_validation:
        if val_idx is None:
            inner_train, inner_val = carve_validation(y[train_idx], val_fraction, rng.spawn(0))
            fit_idx, val_idx = train_idx[inner_train], train_idx[inner_val]
        validation = (X[val_idx], y[val_idx])
    unlabeled = X[test_idx] if model.transductive else None

    model.fit(X[fit_idx], y[fit_idx], rng.spawn(1), validation=validation, unlabeled=unlabeled)
    proba = model.predict_proba(X[test_idx])
    report = classification_report(confusion(y[test_idx], threshold(proba)))
    return {"model": model, "proba": proba, "report": report}


def _run_parallel(task: Callable[[int], Any], count: int, threads: int) -> List[Any]:
    if threads > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=min(threads, count)) as pool:
            return list(pool.map(task, range(count)))
    return [task(i) for i in range(count)]


def run_kfold(
    spec: ModelSpec,
    samples: Sequence[Sample],
    k: int = 5,
    seed: int = 42,
    threads: int = 1,
    val_fraction: float = 0.10,
    keep_models: bool = False,
) -> FoldReport:
    """
    Stratified k-fold evaluation of one model family.

    Returns:
        FoldReport with per-fold accuracy, classification reports and the
        test-set probabilities in `details`

    Raises:
        FoldError: Wrapping any failure with the model and fold index
    """
    X, y, ids = stack_samples(samples)
    root = RngStream(seed)
    folds = kfold_indices(y, k, root.spawn(0))

    def run_fold(i: int) -> FoldResult:
        train_idx, test_idx = folds[i]
        try:
            outcome = fit_and_score(spec, X, y, train_idx, test_idx, root.spawn(i + 1), val_fraction)
        except (VeridictError, ValueError, ArithmeticError) as e:
            raise FoldError(spec.label, i, e) from e
        report = outcome["report"]
        return FoldResult(
            fold=i,
            accuracy=float(report.accuracy),
            report=report,
            test_ids=[ids[j] for j in test_idx],
            probabilities=[float(p) for p in outcome["proba"]],
            model=outcome["model"] if keep_models else None,
        )

    results = _run_parallel(run_fold, k, threads)
    for result in results:
        logger.info(f"{spec.label} fold {result.fold}: accuracy {result.accuracy:.4f}")

    summary = summarize_folds([r.accuracy for r in results], [r.report for r in results], model=spec.label)
    summary.details = [
        {"fold": r.fold, "test_ids": r.test_ids, "probabilities": r.probabilities, "model": r.model}
        for r in results
    ]
    logger.info(f"{spec.label}: mean accuracy {summary.mean:.4f} (std {summary.std:.4f})")
    return summary


def compare_models(
    specs: Sequence[ModelSpec],
    samples: Sequence[Sample],
    k: int = 5,
    seed: int = 42,
    threads: int = 1,
    val_fraction: float = 0.10,
) -> List[FoldReport]:
    """Run every spec on the same fold partition (paired comparison)."""
    if not specs:
        raise ValidationError("compare_models needs at least one model spec")
    return [run_kfold(spec, samples, k, seed, threads, val_fraction) for spec in specs]


@dataclass
class HoldoutResult:
    model: str
    report: ClassificationReport
    split: Dict[str, List[str]]
    classifier: Optional[Classifier] = field(default=None, repr=False)


def run_holdout(
    spec: ModelSpec,
    samples: Sequence[Sample],
    ratios: Sequence[float] = DEFAULT_RATIOS,
    seed: int = 42,
) -> HoldoutResult:
    """Train on the train part, early-stop on val, report on test (the fixed 70/10/20 mode)."""
    X, y, ids = stack_samples(samples)
    root = RngStream(seed)
    train_idx, val_idx, test_idx = split_indices(y, ratios, root.spawn(0))
    try:
        outcome = fit_and_score(spec, X, y, train_idx, test_idx, root.spawn(1), val_idx=val_idx)
    except VeridictError as e:
        raise FoldError(spec.label, 0, e) from e
    split = {
        "train": [ids[i] for i in train_idx],
        "val": [ids[i] for i in val_idx],
        "test": [ids[i] for i in test_idx],
    }
    logger.info(f"{spec.label} holdout: accuracy {float(outcome['report'].accuracy):.4f}")
    return HoldoutResult(spec.label, outcome["report"], split, outcome["model"])


@dataclass
class TrialSummary:
    model: str
    seeds: List[int]
    trials: List[FoldReport]

    @property
    def means(self) -> List[float]:
        return [t.mean for t in self.trials]

    @property
    def mean(self) -> float:
        return float(np.mean(self.means))

    @property
    def std(self) -> float:
        return float(np.std(self.means))


def run_trials(
    spec: ModelSpec,
    samples: Sequence[Sample],
    k: int = 5,
    seeds: Sequence[int] = (42, 43, 44),
    threads: int = 1,
    val_fraction: float = 0.10,
) -> TrialSummary:
    """Repeat k-fold evaluation under several seeds."""
    if not seeds:
        raise ValidationError("run_trials needs at least one seed")
    trials = [run_kfold(spec, samples, k, s, threads, val_fraction) for s in seeds]
    return TrialSummary(model=spec.label, seeds=list(seeds), trials=trials)
