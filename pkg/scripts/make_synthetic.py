#!/usr/bin/env python
"""
Write the synthetic benchmark dataset, or a small on-disk corpus with WAVs and a manifest.
"""
import argparse
import sys
from pathlib import Path

# Add project root to Python path
project_root = str(Path(__file__).parent.parent)
sys.path.append(project_root)

from src.ingest.dataset import write_dataset
from src.ingest.synthetic import make_synthetic_dataset, write_synthetic_corpus


def main():
    parser = argparse.ArgumentParser(description="Generate synthetic deception data")
    parser.add_argument("out_dir", help="Output directory")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--per-class", type=int, default=60, help="Samples per class")
    parser.add_argument("--signal", type=int, default=20, help="Dimensions carrying class signal")
    parser.add_argument("--separation", type=float, default=4.0, help="Class mean gap in std units")
    parser.add_argument("--corpus", action="store_true", help="Write WAVs, visual CSV and manifest instead")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    if args.corpus:
        path = write_synthetic_corpus(out_dir, n_per_class=args.per_class, seed=args.seed)
    else:
        samples = make_synthetic_dataset(args.per_class, args.signal, args.separation, args.seed)
        path = write_dataset(samples, out_dir / "dataset.csv")
    print(f"Wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
