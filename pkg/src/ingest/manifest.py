"""
Manifest loading and validation.

A manifest is a UTF-8 JSON array of entries:

    {"id": "trial_001", "label": "deceptive",
     "audio": "audio/trial_001.wav", "visual": "visual/trial_001.csv",
     "annotations": [0, 1, ...]}

`audio` may point at a WAV file or a feature CSV, `visual` at a feature CSV.
Relative paths resolve against the manifest's directory.
"""
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

from src.config.settings import FUSION_SETTINGS
from src.errors import ManifestError
from src.ingest.dataset import LABELS

logger = logging.getLogger(__name__)

ENTRY_KEYS = {"id", "label", "audio", "visual", "annotations"}


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    label: int
    audio: Optional[Path] = None
    visual: Optional[Path] = None
    annotations: Optional[Tuple[int, ...]] = None

    @property
    def modalities(self) -> List[str]:
        present = []
        if self.audio is not None:
            present.append("audio")
        if self.visual is not None:
            present.append("visual")
        if self.annotations is not None:
            present.append("annotation")
        return present


@dataclass(frozen=True)
class Manifest:
    path: Path
    entries: Tuple[ManifestEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def label_counts(self) -> dict:
        counts = Counter(entry.label for entry in self.entries)
        return {name: counts.get(value, 0) for name, value in LABELS.items()}

    def ids(self) -> List[str]:
        return [entry.id for entry in self.entries]


def _resolve(base: Path, value, entry_id: str, key: str, errors: List[str]) -> Optional[Path]:
    if value is None:
        return None
    if not isinstance(value, str) or not value:
        errors.append(f"{entry_id}: '{key}' must be a path string")
        return None
    path = Path(value)
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        errors.append(f"{entry_id}: {key} file not found: {path}")
    return path


def _parse_annotations(value, entry_id: str, errors: List[str]) -> Optional[Tuple[int, ...]]:
    if value is None:
        return None
    expected = FUSION_SETTINGS["n_annotations"]
    if not isinstance(value, list) or len(value) != expected:
        errors.append(f"{entry_id}: 'annotations' must be a list of {expected} flags")
        return None
    if any(isinstance(flag, bool) or flag not in (0, 1) for flag in value):
        errors.append(f"{entry_id}: annotation flags must be 0 or 1")
        return None
    return tuple(int(flag) for flag in value)


def parse_manifest(raw, base_dir: Union[str, Path]) -> Manifest:
    """
    Validate decoded manifest JSON.

    Args:
        raw: Decoded JSON (must be a list of objects)
        base_dir: Directory that relative paths resolve against

    Returns:
        Validated Manifest

    Raises:
        ManifestError: With one item per problem found
    """
    base_dir = Path(base_dir)
    if not isinstance(raw, list):
        raise ManifestError(["manifest must be a JSON array of entries"])

    errors: List[str] = []
    entries: List[ManifestEntry] = []
    seen = set()

    for position, item in enumerate(raw):
        if not isinstance(item, dict):
            errors.append(f"entry {position}: not an object")
            continue
        entry_id = item.get("id")
        if not isinstance(entry_id, str) or not entry_id:
            errors.append(f"entry {position}: missing or empty 'id'")
            continue
        unknown = set(item) - ENTRY_KEYS
        if unknown:
            errors.append(f"{entry_id}: unknown keys {sorted(unknown)}")
        if entry_id in seen:
            errors.append(f"duplicate id: {entry_id}")
            continue
        seen.add(entry_id)

        label = item.get("label")
        if label not in LABELS:
            errors.append(f"{entry_id}: unknown label {label!r}")
            continue

        audio = _resolve(base_dir, item.get("audio"), entry_id, "audio", errors)
        visual = _resolve(base_dir, item.get("visual"), entry_id, "visual", errors)
        annotations = _parse_annotations(item.get("annotations"), entry_id, errors)

        entry = ManifestEntry(entry_id, LABELS[label], audio, visual, annotations)
        if not entry.modalities:
            errors.append(f"{entry_id}: no modalities present")
        entries.append(entry)

    if errors:
        raise ManifestError(errors)
    if not entries:
        raise ManifestError(["manifest has no entries"])
    return Manifest(path=base_dir, entries=tuple(entries))


def load_manifest(path: Union[str, Path]) -> Manifest:
    """Load and validate a manifest file; logs the per-label counts."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ManifestError([f"manifest not found: {path}"]) from e
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ManifestError([f"manifest is not valid UTF-8 JSON: {e}"]) from e

    manifest = parse_manifest(raw, path.parent)
    manifest = Manifest(path=path, entries=manifest.entries)
    counts = manifest.label_counts()
    logger.info(
        f"Loaded manifest {path.name}: {len(manifest)} entries "
        f"({counts['truthful']} truthful, {counts['deceptive']} deceptive)"
    )
    return manifest
