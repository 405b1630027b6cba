"""
Modality fusion: interpolate each modality to a fixed length and concatenate.

Fused layout for audio_len=A, visual_len=V:

    [audio (A) | audio_present] [visual (V) | visual_present] [annotations (39)]

An absent audio or visual modality is zero-filled with its presence flag 0.
Annotation flags are categorical and enter as raw 0/1 values.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.audio.features import extract_audio_features
from src.audio.wav import read_wav
from src.config.settings import FUSION_SETTINGS
from src.errors import ConfigError, DataFormatError, ShapeError
from src.ingest.dataset import FeatureVector, Sample, read_feature_csv
from src.ingest.manifest import Manifest, ManifestEntry

logger = logging.getLogger(__name__)


def resample_vector(v, target_len: int) -> np.ndarray:
    """
    Linearly interpolate a vector onto `target_len` evenly spaced points.

    Both vectors are placed on the normalized index range [0, 1], so the
    endpoints are preserved.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ShapeError("cannot resample an empty vector")
    if target_len < 1:
        raise ConfigError(f"target length must be at least 1, got {target_len}")
    if v.size == target_len:
        return v.copy()
    if v.size == 1:
        return np.full(target_len, v[0])
    if target_len == 1:
        return v[:1].copy()
    source = np.linspace(0.0, 1.0, v.size)
    target = np.linspace(0.0, 1.0, target_len)
    return np.interp(target, source, v)


def fused_length(audio_len: int, visual_len: int, n_annotations: int = FUSION_SETTINGS["n_annotations"]) -> int:
    return audio_len + 1 + visual_len + 1 + n_annotations


def fuse_modalities(
    audio: Optional[np.ndarray],
    visual: Optional[np.ndarray],
    annotations: Optional[Sequence[int]],
    audio_len: int = FUSION_SETTINGS["audio_len"],
    visual_len: int = FUSION_SETTINGS["visual_len"],
    n_annotations: int = FUSION_SETTINGS["n_annotations"],
) -> FeatureVector:
    """
    Fuse per-modality vectors into one FeatureVector.

    Args:
        audio: Audio descriptor or None when absent
        visual: Visual descriptor or None when absent
        annotations: 0/1 gesture flags or None when absent (zero-filled)
        audio_len: Target length of the audio block
        visual_len: Target length of the visual block
        n_annotations: Length of the annotation block

    Returns:
        FeatureVector with audio, visual and annotation spans

    Raises:
        ConfigError: If a configured length is below 1
    """
    if audio_len < 1 or visual_len < 1:
        raise ConfigError(f"fusion lengths must be >= 1, got audio_len={audio_len}, visual_len={visual_len}")

    blocks = []
    for vector, length in ((audio, audio_len), (visual, visual_len)):
        if vector is None:
            blocks.append(np.zeros(length + 1))
        else:
            blocks.append(np.append(resample_vector(vector, length), 1.0))

    if annotations is None:
        annot = np.zeros(n_annotations)
    else:
        annot = np.asarray(annotations, dtype=np.float64).ravel()
        if annot.size != n_annotations:
            raise ShapeError(f"expected {n_annotations} annotation flags, got {annot.size}")
        if not np.all((annot == 0.0) | (annot == 1.0)):
            raise ShapeError("annotation flags must be 0 or 1")
    blocks.append(annot)

    a_end = audio_len + 1
    v_end = a_end + visual_len + 1
    spans = {
        "audio": (0, a_end),
        "visual": (a_end, v_end),
        "annotation": (v_end, v_end + n_annotations),
    }
    return FeatureVector(values=np.concatenate(blocks), spans=spans)


def _csv_row(path: Path, entry_id: str) -> np.ndarray:
    rows = read_feature_csv(path)
    if entry_id in rows:
        return rows[entry_id]
    if len(rows) == 1:
        return next(iter(rows.values()))
    raise DataFormatError(f"{path} has no row for id {entry_id}")


def load_audio_vector(entry: ManifestEntry) -> Optional[np.ndarray]:
    """Audio descriptor of an entry: extracted from a WAV or read from a CSV."""
    if entry.audio is None:
        return None
    if entry.audio.suffix.lower() == ".wav":
        return extract_audio_features(read_wav(entry.audio)).values
    return _csv_row(entry.audio, entry.id)


def load_visual_vector(entry: ManifestEntry) -> Optional[np.ndarray]:
    if entry.visual is None:
        return None
    return _csv_row(entry.visual, entry.id)


def load_modalities(entry: ManifestEntry) -> Dict[str, Optional[np.ndarray]]:
    """Raw per-modality vectors of one manifest entry."""
    return {
        "audio": load_audio_vector(entry),
        "visual": load_visual_vector(entry),
        "annotation": None if entry.annotations is None else np.asarray(entry.annotations, dtype=np.float64),
    }


def build_samples(
    manifest: Manifest,
    audio_len: int = FUSION_SETTINGS["audio_len"],
    visual_len: int = FUSION_SETTINGS["visual_len"],
    threads: int = 1,
) -> List[Sample]:
    """
    Load every entry's modalities and fuse them.

    Entries load concurrently when threads > 1; the result keeps manifest order.
    """
    def build(entry: ManifestEntry) -> Sample:
        parts = load_modalities(entry)
        fused = fuse_modalities(parts["audio"], parts["visual"], parts["annotation"], audio_len, visual_len)
        return Sample(entry.id, entry.label, fused)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(build, manifest.entries))
    else:
        samples = [build(entry) for entry in manifest.entries]

    logger.info(f"Fused {len(samples)} samples to {len(samples[0].features)} features")
    return samples
