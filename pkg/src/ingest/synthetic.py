"""
Synthetic fused datasets and on-disk corpora for benchmarks and tests.
"""
import json
import logging
from pathlib import Path
from typing import List, Union

import numpy as np

from src.audio.wav import PcmSignal, write_wav
from src.config.settings import FUSION_SETTINGS
from src.ingest.dataset import LABEL_NAMES, FeatureVector, Sample, write_feature_csv
from src.ingest.fusion import fuse_modalities
from src.utils.rng import RngStream

logger = logging.getLogger(__name__)


def signal_positions(n_signal: int, audio_len: int, visual_len: int) -> np.ndarray:
    """Fused indices carrying class signal: half in the audio block, half in the visual block."""
    n_audio = n_signal - n_signal // 2
    n_visual = n_signal // 2
    if n_audio > audio_len or n_visual > visual_len:
        raise ValueError(f"cannot place {n_signal} signal dims in {audio_len}+{visual_len} slots")
    audio = np.linspace(0, audio_len - 1, n_audio).round().astype(np.int64) if n_audio else np.zeros(0, np.int64)
    visual_start = audio_len + 1
    visual = (visual_start + np.linspace(0, visual_len - 1, n_visual).round().astype(np.int64)
              if n_visual else np.zeros(0, np.int64))
    return np.concatenate([audio, visual])


def make_synthetic_dataset(
    n_per_class: int = 60,
    n_signal: int = 20,
    separation: float = 4.0,
    seed: int = 42,
    audio_len: int = FUSION_SETTINGS["audio_len"],
    visual_len: int = FUSION_SETTINGS["visual_len"],
) -> List[Sample]:
    """
    Two-class fused dataset with unit-variance Gaussian features.

    Class means differ by `separation` standard deviations on `n_signal`
    dimensions of the audio and visual blocks. Annotation flags are fair
    coin flips independent of the label. With the default lengths every
    vector has 161 entries.
    """
    rng = RngStream(seed)
    n = 2 * n_per_class
    labels = np.repeat([0, 1], n_per_class)
    audio = rng.normal((n, audio_len))
    visual = rng.normal((n, visual_len))
    flags = rng.bernoulli_mask((n, FUSION_SETTINGS["n_annotations"]), 0.5).astype(np.float64)

    samples = []
    for i in range(n):
        fused = fuse_modalities(audio[i], visual[i], flags[i], audio_len, visual_len)
        values = fused.values.copy()
        shift = separation / 2.0 if labels[i] == 1 else -separation / 2.0
        values[signal_positions(n_signal, audio_len, visual_len)] += shift
        samples.append(Sample(f"syn_{i:03d}", int(labels[i]), FeatureVector(values, fused.spans)))
    logger.info(f"Synthetic dataset: {n} samples, {n_signal} signal dims, separation {separation}")
    return samples


def synthetic_tone(label: int, rng: RngStream, sample_rate: int = 8000, duration: float = 0.5) -> PcmSignal:
    """Noisy tone whose pitch band depends on the label (120 Hz vs 220 Hz)."""
    n = int(sample_rate * duration)
    base = 220.0 if label == 1 else 120.0
    f0 = base + 10.0 * rng.random(1)[0]
    t = np.arange(n) / sample_rate
    samples = 0.5 * np.sin(2.0 * np.pi * f0 * t) + 0.05 * rng.normal(n)
    return PcmSignal(sample_rate, np.clip(samples, -1.0, 1.0))


def write_synthetic_corpus(
    out_dir: Union[str, Path],
    n_per_class: int = 6,
    seed: int = 42,
    sample_rate: int = 8000,
    duration: float = 0.5,
) -> Path:
    """
    Write WAVs, a visual feature CSV and a manifest for end-to-end runs.

    Returns:
        Path of the written manifest.json
    """
    out_dir = Path(out_dir)
    rng = RngStream(seed)
    tones = rng.spawn(0)
    dataset = make_synthetic_dataset(n_per_class=n_per_class, seed=int(rng.spawn(1).seed))

    visual_rows = {}
    entries = []
    for sample in dataset:
        wav_path = write_wav(synthetic_tone(sample.label, tones, sample_rate, duration),
                             out_dir / "audio" / f"{sample.id}.wav")
        visual_rows[sample.id] = sample.features.span("visual")[:-1]
        entries.append({
            "id": sample.id,
            "label": LABEL_NAMES[sample.label],
            "audio": str(wav_path.relative_to(out_dir)),
            "visual": "visual.csv",
            "annotations": [int(v) for v in sample.features.span("annotation")],
        })

    write_feature_csv(visual_rows, out_dir / "visual.csv")
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote synthetic corpus of {len(entries)} entries to {out_dir}")
    return manifest_path
