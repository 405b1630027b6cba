"""
Report files and text tables for evaluation results.
"""
import json
import logging
from pathlib import Path
from typing import List, Sequence, Union

from src.evaluation.metrics import NEGATIVE, POSITIVE, FoldReport, display

logger = logging.getLogger(__name__)


def fold_report_to_dict(report: FoldReport) -> dict:
    """`{model, folds:[{accuracy, report}], mean, std}`"""
    folds = []
    for i, accuracy in enumerate(report.accuracies):
        entry = {"accuracy": accuracy}
        if i < len(report.reports):
            entry["report"] = report.reports[i].to_dict()
        folds.append(entry)
    return {"model": report.model, "folds": folds, "mean": report.mean, "std": report.std}


def write_report(reports: Sequence[FoldReport], path: Union[str, Path]) -> Path:
    """Write fold reports as one JSON document (keys sorted, stable output)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"models": [fold_report_to_dict(r) for r in reports]}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote report for {len(reports)} model(s) to {path}")
    return path


def _format_rows(header: List[str], rows: List[List[str]]) -> List[str]:
    widths = [max(len(line[c]) for line in [header] + rows) for c in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[c]) if c == 0 else cell.rjust(widths[c])
                       for c, cell in enumerate(line))
             for line in [header] + rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return lines


def class_table(named: Sequence[tuple]) -> str:
    """Per-class precision/recall/F1 table; `named` holds (model name, ClassificationReport)."""
    header = ["Model", "Class", "Precision", "Recall", "F1-score", "Support"]
    rows = []
    for name, report in named:
        for cls in (POSITIVE, NEGATIVE):
            m = report.classes[cls]
            rows.append([name, cls, display(m.precision), display(m.recall), display(m.f1), str(m.support)])
        rows.append([name, "accuracy", "", "", display(report.accuracy), str(report.cm.total)])
    return "\n".join(_format_rows(header, rows))


def fold_table(reports: Sequence[FoldReport]) -> str:
    """Per-fold accuracy table with mean and std columns."""
    k = max((len(r.accuracies) for r in reports), default=0)
    header = ["Model"] + [f"Fold {i + 1}" for i in range(k)] + ["Mean", "Std"]
    rows = []
    for r in reports:
        cells = [f"{a:.4f}" for a in r.accuracies] + [""] * (k - len(r.accuracies))
        rows.append([r.model] + cells + [f"{r.mean:.4f}", f"{r.std:.4f}"])
    return "\n".join(_format_rows(header, rows))


def trial_table(summary) -> str:
    """One row per seed for a repeated k-fold run (TrialSummary)."""
    header = ["Trial", "Seed", "Mean", "Std"]
    rows = [[str(i + 1), str(seed), f"{t.mean:.4f}", f"{t.std:.4f}"]
            for i, (seed, t) in enumerate(zip(summary.seeds, summary.trials))]
    rows.append(["all", "", f"{summary.mean:.4f}", f"{summary.std:.4f}"])
    return f"{summary.model}\n" + "\n".join(_format_rows(header, rows))


def render_tables(reports: Sequence[FoldReport]) -> str:
    """
    Classification reports (pooled over folds) followed by per-fold accuracies.
    """
    pooled = [(r.model, r.pooled()) for r in reports if r.reports]
    parts = []
    if pooled:
        parts.append("Classification report (pooled over folds)\n" + class_table(pooled))
    parts.append("Test accuracy per fold\n" + fold_table(reports))
    return "\n\n".join(parts) + "\n"


def write_tables(reports: Sequence[FoldReport], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_tables(reports), encoding="utf-8")
    return path
