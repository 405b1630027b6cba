"""
Command-line interface module.

Exit codes: 0 success, 1 configuration or usage error, 2 bad input data,
3 runtime failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from .audio.features import extract_audio_features
from .audio.wav import read_wav
from .config.pipeline import MODEL_FAMILIES, PipelineConfig, build_pipeline_config, load_pipeline_config
from .config.settings import DEFAULT_SEED, validate_settings
from .errors import ConfigError, DataFormatError, ManifestError, ValidationError, VeridictError
from .evaluation.harness import compare_models, specs_from_config
from .evaluation.metrics import classification_report, confusion
from .evaluation.reporting import class_table, write_report, write_tables
from .explain.importance import permutation_importance
from .explain.lime import lime_explain
from .explain.shapley import shapley_summary
from .ingest.dataset import (
    Sample,
    dataset_spans,
    read_dataset,
    read_split_files,
    select_ids,
    stack_samples,
    write_dataset,
    write_feature_csv,
    write_split_files,
    zero_span,
)
from .ingest.fusion import build_samples
from .ingest.manifest import load_manifest
from .ingest.splits import balance_classes, carve_validation, split_dataset
from .models.base import create_model, threshold
from .models.conv1d import write_training_curve
from .models.serialization import load_model, save_model
from .selection.feature_select import apply_mask, correlation_matrix, select_sample_features, write_kde_curves
from .utils.env_utils import resolve_log_level, resolve_threads
from .utils.rng import RngStream

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INPUT = 2
EXIT_RUNTIME = 3

# Child streams of RngStream(seed) owned by the pipeline stages.
BALANCE_STREAM = 1000
SPLIT_STREAM = 1001
FIT_STREAM = 1002
EXPLAIN_STREAM = 1003

KDE_CURVES = 3


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def setup_logging(level: Optional[str] = None):
    """Configure logging."""
    logging.basicConfig(
        level=getattr(logging, resolve_log_level(level), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )


def resolve_config(args) -> PipelineConfig:
    """
    Config file (or defaults) with command-line overrides applied.

    The seed comes from --seed, then the config file, then VERIDICT_SEED.
    """
    overrides = {
        "seed": args.seed,
        "k": getattr(args, "k", None),
        "threads": args.threads,
        "out_dir": args.out,
        "manifest": getattr(args, "manifest", None),
        "dataset": getattr(args, "dataset", None),
    }
    models = getattr(args, "models", None)
    if models:
        overrides["models"] = [m.strip() for m in models.split(",") if m.strip()]
    if getattr(args, "no_annotations", False):
        overrides["no_annotations"] = True

    seed_in_file = False
    if args.config:
        config = load_pipeline_config(args.config)
        raw = config.model_dump()
        seed_in_file = "seed" in config.model_fields_set
    else:
        raw = {"version": 1}
    if overrides["seed"] is None and not seed_in_file:
        overrides["seed"] = validate_settings()["SEED"]
    if overrides["manifest"] and raw.get("dataset"):
        raw["dataset"] = None
    if overrides["dataset"] and raw.get("manifest"):
        raw["manifest"] = None
    config = build_pipeline_config(raw, overrides)

    select = getattr(args, "select", None)
    if select is not None:
        config = config.model_copy(update={"selection": config.selection.model_copy(update={"enabled": select})})
    return config


def load_samples(config: PipelineConfig, threads: int) -> List[Sample]:
    """Fused samples from the configured manifest or dataset file."""
    if config.dataset:
        return read_dataset(config.dataset)
    if config.manifest:
        manifest = load_manifest(config.manifest)
        return build_samples(manifest, config.fusion.audio_len, config.fusion.visual_len, threads)
    raise ConfigError("no input: give --manifest, --dataset or a config that names one")


def prepare_samples(config: PipelineConfig, threads: int) -> List[Sample]:
    """Load, balance and optionally ablate the annotation span."""
    samples = load_samples(config, threads)
    samples = balance_classes(samples, RngStream(config.seed).spawn(BALANCE_STREAM))
    if config.no_annotations:
        samples = zero_span(samples, "annotation")
        logger.info("Annotation span zeroed")
    return samples


def _split_rows(samples: List[Sample], split_dir: Optional[str], part: str) -> Optional[List[Sample]]:
    if not split_dir:
        return None
    ids = read_split_files(split_dir).get(part)
    if ids is None:
        raise ValidationError(f"{split_dir} has no {part}.txt")
    return select_ids(samples, ids)


def fit_on(family: str, config: PipelineConfig, train: List[Sample], val: Optional[List[Sample]] = None,
           unlabeled: Optional[List[Sample]] = None, threads: int = 1):
    """Fit one family; validation is carved from train when the model needs it and none is given."""
    model = create_model(family, config.hyper_for(family), threads=threads)
    rng = RngStream(config.seed).spawn(FIT_STREAM)
    X, y, _ = stack_samples(train)
    validation = None
    if model.needs_validation:
        if val:
            X_val, y_val, _ = stack_samples(val)
        else:
            fit_idx, val_idx = carve_validation(y, config.val_fraction, rng.spawn(0))
            X_val, y_val = X[val_idx], y[val_idx]
            X, y = X[fit_idx], y[fit_idx]
        validation = (X_val, y_val)
    extra = stack_samples(unlabeled)[0] if unlabeled and model.transductive else None
    return model.fit(X, y, rng.spawn(1), validation=validation, unlabeled=extra)


def cmd_extract(args) -> int:
    """Per-sample audio feature CSVs plus an index."""
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out or "features")
    out_dir.mkdir(parents=True, exist_ok=True)

    index = []
    errors = []
    for entry in manifest.entries:
        if entry.audio is None or entry.audio.suffix.lower() != ".wav":
            logger.info(f"{entry.id}: no WAV audio, skipped")
            continue
        try:
            features = extract_audio_features(read_wav(entry.audio))
        except (DataFormatError, OSError) as e:
            logger.warning(f"{entry.id}: extraction failed: {e}")
            errors.append({"id": entry.id, "path": str(entry.audio), "error": str(e)})
            continue
        path = write_feature_csv({entry.id: features.values}, out_dir / f"{entry.id}.csv")
        index.append({"id": entry.id, "label": entry.label, "path": path.name})

    pd.DataFrame(index, columns=["id", "label", "path"]).to_csv(out_dir / "index.csv", index=False, lineterminator="\n")
    if errors:
        (out_dir / "errors.json").write_text(json.dumps(errors, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"Error: {len(errors)} file(s) failed: " + ", ".join(e["id"] for e in errors), file=sys.stderr)
        return EXIT_INPUT
    print(f"Extracted {len(index)} feature file(s) to {out_dir}")
    return EXIT_OK


def cmd_build(args) -> int:
    """Fused dataset plus train/val/test split files."""
    config = resolve_config(args)
    threads = resolve_threads(args.threads, config.threads)
    samples = prepare_samples(config, threads)
    out_dir = Path(config.out_dir)
    write_dataset(samples, out_dir / "dataset.csv")
    split = split_dataset(samples, config.split_ratios, RngStream(config.seed).spawn(SPLIT_STREAM))
    write_split_files(split, out_dir)
    print(f"Wrote {len(samples)} samples and split files to {out_dir}")
    return EXIT_OK


def cmd_select(args) -> int:
    """Univariate feature selection over a dataset file."""
    config = resolve_config(args)
    samples = load_samples(config, resolve_threads(args.threads, config.threads))
    mask = select_sample_features(samples, config.selection)
    out_dir = Path(config.out_dir)
    mask.write_csv(out_dir / "selection.csv")
    X, y, _ = stack_samples(samples)
    correlation_matrix(X, y).to_csv(out_dir / "correlation.csv", float_format="%.17g", lineterminator="\n")
    for j in np.argsort(mask.kde_overlap, kind="stable")[:KDE_CURVES]:
        write_kde_curves(X[y == 0, j], X[y == 1, j], out_dir / "kde" / f"f{j}.csv")
    write_dataset(apply_mask(samples, mask), out_dir / "dataset.csv")
    print(f"Kept {mask.n_kept} of {len(mask.keep)} features")
    return EXIT_OK


def cmd_train(args) -> int:
    """Fit one model family and write the model file."""
    config = resolve_config(args)
    threads = resolve_threads(args.threads, config.threads)
    samples = load_samples(config, threads)
    train = _split_rows(samples, args.split_dir, "train") or samples
    val = _split_rows(samples, args.split_dir, "val") if args.split_dir else None
    test = _split_rows(samples, args.split_dir, "test") if args.split_dir else None
    model = fit_on(args.family, config, train, val, test, threads)
    path = save_model(model, Path(config.out_dir) / f"{args.family}.model.json", dataset_spans(samples))
    if hasattr(model, "training_history"):
        write_training_curve(model.training_history(), Path(config.out_dir) / f"{args.family}.curve.csv")
    print(f"Saved {args.family} model to {path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    """Score a model file on a dataset (or its test split)."""
    config = resolve_config(args)
    model, _ = load_model(args.model_file)
    samples = load_samples(config, 1)
    rows = _split_rows(samples, args.split_dir, "test") or samples
    X, y, _ = stack_samples(rows)
    report = classification_report(confusion(y, threshold(model.predict_proba(X))))
    out = Path(config.out_dir) / "evaluation.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"model": model.family, "report": report.to_dict()}, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    print(class_table([(model.family, report)]))
    return EXIT_OK


def perturbation_scale(model, X: np.ndarray) -> np.ndarray:
    """Per-feature std of the rows the model was trained on; the given rows for older model files."""
    if model.feature_std is not None:
        return model.feature_std
    logger.warning("Model file has no training feature std; scaling perturbations by the dataset")
    return np.std(X, axis=0)


def write_explanations(model, samples: List[Sample], config: PipelineConfig, out_dir: Path) -> None:
    """LIME explanations for the first few samples, a Shapley summary and permutation importance."""
    settings = config.explain
    if settings.n_samples == 0:
        return
    X, y, ids = stack_samples(samples)
    spans = dataset_spans(samples)
    rng = RngStream(config.seed).spawn(EXPLAIN_STREAM)
    chosen = list(range(min(settings.n_samples, len(samples))))
    scale = perturbation_scale(model, X)
    for i in chosen:
        explanation = lime_explain(model, X[i], scale, settings.n_perturb, k_top=settings.k_top,
                                   rng=rng.spawn(i), instance_id=ids[i], spans=spans)
        explanation.write_json(out_dir / "explanations" / f"{ids[i]}.json")
    background = X[np.sort(rng.spawn(len(samples)).choice(len(samples), min(settings.background_size, len(samples))))]
    summary = shapley_summary(model, X[chosen], [ids[i] for i in chosen], background, settings.n_perm,
                              rng.spawn(len(samples) + 1), spans)
    summary.write_csv(out_dir / "explanations" / "shapley.csv")
    if settings.n_repeats > 0:
        importance = permutation_importance(model, X, y, settings.n_repeats, rng.spawn(len(samples) + 2))
        importance.write_csv(out_dir / "explanations" / "importance.csv", spans)


def cmd_run(args) -> int:
    """fuse, balance, select, compare models, write reports and explanations."""
    config = resolve_config(args)
    threads = resolve_threads(args.threads, config.threads)
    samples = prepare_samples(config, threads)
    out_dir = Path(config.out_dir)

    if config.selection.enabled:
        mask = select_sample_features(samples, config.selection)
        mask.write_csv(out_dir / "selection.csv")
        samples = apply_mask(samples, mask)

    specs = specs_from_config(config)
    reports = compare_models(specs, samples, config.k, config.seed, threads, config.val_fraction)
    write_report(reports, out_dir / "report.json")
    write_tables(reports, out_dir / "report.txt")

    candidates = [r for r in reports if r.model != "gcn"]
    if candidates:
        best = max(candidates, key=lambda r: r.mean)
        model = fit_on(best.model, config, samples, threads=threads)
        save_model(model, out_dir / "model.json", dataset_spans(samples))
        write_explanations(model, samples, config, out_dir)

    print((out_dir / "report.txt").read_text(encoding="utf-8"), end="")
    return EXIT_OK


def cmd_explain(args) -> int:
    """Local explanation of one sample as JSON."""
    config = resolve_config(args)
    model, spans = load_model(args.model_file)
    samples = load_samples(config, 1)
    X, _, ids = stack_samples(samples)
    if args.id not in ids:
        print(f"Error: unknown id {args.id!r}", file=sys.stderr)
        return EXIT_CONFIG
    i = ids.index(args.id)
    settings = config.explain
    explanation = lime_explain(
        model, X[i], perturbation_scale(model, X), settings.n_perturb, k_top=settings.k_top,
        rng=RngStream(config.seed).spawn(EXPLAIN_STREAM), instance_id=args.id,
        spans=spans or dataset_spans(samples),
    )
    if args.out:
        explanation.write_json(Path(args.out) / f"{args.id}.json")
    else:
        print(json.dumps(explanation.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = CliParser(add_help=False)
    common.add_argument("--config", help="Pipeline config JSON")
    common.add_argument("--seed", type=int, help=f"Root seed (env VERIDICT_SEED, default {DEFAULT_SEED})")
    common.add_argument("--threads", type=int, help="Worker threads (env VERIDICT_THREADS, default 1)")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--log-level", help="Logging level (env VERIDICT_LOG_LEVEL, default INFO)")

    inputs = CliParser(add_help=False)
    inputs.add_argument("--manifest", help="Manifest JSON")
    inputs.add_argument("--dataset", help="Fused dataset CSV")

    parser = CliParser(prog="veridict", description="Multimodal deception classification pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[common], help="Extract audio features from manifest WAVs")
    p.add_argument("--manifest", required=True, help="Manifest JSON")
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("build", parents=[common, inputs], help="Fuse modalities and write split files")
    p.add_argument("--no-annotations", action="store_true", help="Zero the annotation span")
    p.set_defaults(handler=cmd_build)

    p = sub.add_parser("select", parents=[common, inputs], help="Univariate feature selection")
    p.set_defaults(handler=cmd_select)

    p = sub.add_parser("train", parents=[common, inputs], help="Fit one model family")
    p.add_argument("--family", required=True, choices=MODEL_FAMILIES)
    p.add_argument("--split-dir", help="Directory with train.txt/val.txt/test.txt")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", parents=[common, inputs], help="Score a model file")
    p.add_argument("--model-file", required=True)
    p.add_argument("--split-dir", help="Restrict to the ids in test.txt")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("run", parents=[common, inputs], help="Full k-fold comparison pipeline")
    p.add_argument("--models", help=f"Comma-separated subset of {','.join(MODEL_FAMILIES)}")
    p.add_argument("--k", type=int, help="Number of folds")
    p.add_argument("--no-annotations", action="store_true", help="Zero the annotation span")
    p.add_argument("--select", dest="select", action="store_true", default=None, help="Enable feature selection")
    p.add_argument("--no-select", dest="select", action="store_false", help="Disable feature selection")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("explain", parents=[common, inputs], help="Explain one sample")
    p.add_argument("--model-file", required=True)
    p.add_argument("--id", required=True, help="Sample id")
    p.set_defaults(handler=cmd_explain)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        Exit code
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    validate_settings()

    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ManifestError, DataFormatError, ValidationError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except VeridictError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
