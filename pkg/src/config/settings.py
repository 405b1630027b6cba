"""
Runtime settings for the veridict pipeline.
"""
import os
from pathlib import Path
from typing import Dict, Any

from dotenv import load_dotenv

from src.utils.env_utils import (
    LOG_LEVEL_ENV,
    SEED_ENV,
    THREADS_ENV,
    read_env_int,
)

def validate_settings() -> Dict[str, Any]:
    """Validate all settings and return a dict of validated settings."""
    settings = {}

    # Paths
    settings['BASE_DIR'] = BASE_DIR
    settings['STORAGE_DIR'] = STORAGE_DIR
    settings['RESULTS_DIR'] = RESULTS_DIR

    # Environment fallbacks
    settings['THREADS'] = read_env_int(THREADS_ENV, default=DEFAULT_THREADS, minimum=1)
    settings['SEED'] = read_env_int(SEED_ENV, default=DEFAULT_SEED, minimum=0)
    settings['LOG_LEVEL'] = os.getenv(LOG_LEVEL_ENV, DEFAULT_LOG_LEVEL).upper()

    # Pipeline defaults
    settings['FUSION'] = FUSION_SETTINGS
    settings['AUDIO'] = AUDIO_SETTINGS
    settings['MODEL_FORMAT'] = MODEL_FORMAT

    return settings

# Load environment variables
load_dotenv()

# Base directories
BASE_DIR = Path(__file__).parent.parent.parent
STORAGE_DIR = Path(os.getenv('VERIDICT_STORAGE', BASE_DIR / "storage"))
RESULTS_DIR = STORAGE_DIR / "results"

DEFAULT_SEED = 42
DEFAULT_THREADS = 1
DEFAULT_LOG_LEVEL = "INFO"

# Feature extraction
AUDIO_SETTINGS = {
    "frame_rate": 50,      # analysis frames per second
    "n_mels": 26,          # triangular mel filters
    "n_coeffs": 13,        # cepstral coefficients kept
    "pitch_min_hz": 60.0,
    "pitch_max_hz": 400.0,
    "voicing_threshold": 0.3,
    "min_sample_rate": 8000,
}

# Fusion lengths and annotation layout
FUSION_SETTINGS = {
    "audio_len": 60,
    "visual_len": 60,
    "n_annotations": 39,
}

# Model file format
MODEL_FORMAT = {
    "name": "veridict-model",
    "version": 1,
}
