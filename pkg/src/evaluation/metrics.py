"""
Confusion matrices, per-class classification reports and fold statistics.

Ratios are exact fractions of counts; rounding happens only when a report
is displayed.
"""
import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.errors import ShapeError, ValidationError

logger = logging.getLogger(__name__)

POSITIVE = "deceptive"
NEGATIVE = "truthful"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with deceptive (label 1) as the positive class."""
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValidationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    def to_dict(self) -> Dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion(y_true, y_pred) -> ConfusionMatrix:
    """Count tp/fp/fn/tn for 0/1 label vectors."""
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y_true.size != y_pred.size:
        raise ShapeError(f"{y_true.size} true labels vs {y_pred.size} predictions")
    for name, labels in (("true", y_true), ("predicted", y_pred)):
        if not np.all((labels == 0) | (labels == 1)):
            raise ValidationError(f"{name} labels must be 0 or 1")
    return ConfusionMatrix(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
    )


def _ratio(num: int, den: int) -> Optional[Fraction]:
    return Fraction(num, den) if den else None


def display(value: Fraction, places: int = 2) -> str:
    """Round half up for display."""
    decimal = Decimal(value.numerator) / Decimal(value.denominator)
    return str(decimal.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ClassMetrics:
    precision: Fraction
    recall: Fraction
    f1: Fraction
    support: int
    undefined: tuple = ()     # metric names whose denominator was zero

    def to_dict(self) -> dict:
        return {
            "precision": float(self.precision),
            "recall": float(self.recall),
            "f1": float(self.f1),
            "support": self.support,
            "undefined": list(self.undefined),
        }


def class_metrics(tp: int, fp: int, fn: int) -> ClassMetrics:
    undefined = []
    precision = _ratio(tp, tp + fp)
    if precision is None:
        precision = Fraction(0)
        undefined.append("precision")
    recall = _ratio(tp, tp + fn)
    if recall is None:
        recall = Fraction(0)
        undefined.append("recall")
    if precision + recall == 0:
        f1 = Fraction(0)
        undefined.append("f1")
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return ClassMetrics(precision, recall, f1, tp + fn, tuple(undefined))


@dataclass(frozen=True)
class ClassificationReport:
    cm: ConfusionMatrix
    classes: Dict[str, ClassMetrics]
    accuracy: Fraction

    def to_dict(self) -> dict:
        return {
            "accuracy": float(self.accuracy),
            "confusion": self.cm.to_dict(),
            "classes": {name: metrics.to_dict() for name, metrics in self.classes.items()},
        }


def classification_report(cm: ConfusionMatrix) -> ClassificationReport:
    """
    Per-class precision, recall and F1 plus accuracy.

    Truthful metrics treat label 0 as the positive class. Zero denominators
    yield 0 and are listed in the class's `undefined` field.
    """
    if cm.total <= 0:
        raise ValidationError("classification report needs at least one evaluated sample")
    classes = {
        POSITIVE: class_metrics(cm.tp, cm.fp, cm.fn),
        NEGATIVE: class_metrics(cm.tn, cm.fn, cm.fp),
    }
    return ClassificationReport(cm=cm, classes=classes, accuracy=Fraction(cm.tp + cm.tn, cm.total))


@dataclass
class FoldReport:
    """Per-fold accuracies with mean and population std (ddof=0)."""
    model: str
    accuracies: List[float]
    mean: float
    std: float
    reports: List[ClassificationReport] = field(default_factory=list)
    details: List[dict] = field(default_factory=list)

    def pooled(self) -> Optional[ClassificationReport]:
        """Report over the summed confusion matrices of all folds."""
        if not self.reports:
            return None
        total = self.reports[0].cm
        for report in self.reports[1:]:
            total = total + report.cm
        return classification_report(total)


def summarize_folds(accuracies: Sequence[float], reports: Sequence[ClassificationReport] = (),
                    model: str = "") -> FoldReport:
    """Aggregate fold accuracies; std divides by k."""
    values = np.asarray(accuracies, dtype=np.float64)
    if values.size == 0:
        raise ValidationError("no fold accuracies to summarize")
    return FoldReport(
        model=model,
        accuracies=[float(v) for v in values],
        mean=float(np.mean(values)),
        std=float(np.std(values)),
        reports=list(reports),
    )
