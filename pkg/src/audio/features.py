"""
Frame-level MFCC, pitch and energy features summarized by functionals.
"""
import logging
from typing import List

import numpy as np
from scipy.fft import dct

from src.audio.wav import PcmSignal
from src.config.settings import AUDIO_SETTINGS
from src.errors import ConfigError, ShapeError, ValidationError
from src.ingest.dataset import FeatureVector

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-10
FUNCTIONALS = ("mean", "std", "min", "max")
FRAME_FEATURES = tuple(f"mfcc{i}" for i in range(AUDIO_SETTINGS["n_coeffs"])) + ("pitch", "rms")


def audio_feature_names() -> List[str]:
    """Names of the 60 audio features, functional-major."""
    return [f"{feature}_{functional}" for functional in FUNCTIONALS for feature in FRAME_FEATURES]


def frame_signal(signal: PcmSignal, frame_len: int, hop: int) -> np.ndarray:
    """
    Slice a signal into overlapping frames.

    Returns:
        Array of shape (floor((N - frame_len) / hop) + 1, frame_len)
    """
    if frame_len < 1 or hop < 1:
        raise ConfigError(f"frame_len and hop must be positive, got {frame_len}, {hop}")
    samples = signal.samples
    if samples.size < frame_len:
        raise ShapeError(f"signal of {samples.size} samples is shorter than one frame ({frame_len})")
    count = (samples.size - frame_len) // hop + 1
    windows = np.lib.stride_tricks.sliding_window_view(samples, frame_len)[::hop]
    return np.array(windows[:count])


def fft_size_for(length: int) -> int:
    """Smallest power of two >= length."""
    size = 1
    while size < length:
        size *= 2
    return size


def fft_magnitude(frame: np.ndarray) -> np.ndarray:
    """Magnitude spectrum of a frame zero-padded to a power of two."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.size == 0:
        raise ShapeError("cannot transform an empty frame")
    return np.abs(np.fft.rfft(frame, n=fft_size_for(frame.size), axis=-1))


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, fft_size: int, sample_rate: int) -> np.ndarray:
    """
    Triangular filters spaced evenly on the mel scale from 0 Hz to Nyquist.

    Returns:
        Weights of shape (n_mels, fft_size // 2 + 1)
    """
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    freqs = np.arange(fft_size // 2 + 1) * sample_rate / fft_size
    lower = edges[:-2, None]
    center = edges[1:-1, None]
    upper = edges[2:, None]
    rising = (freqs[None, :] - lower) / (center - lower)
    falling = (upper - freqs[None, :]) / (upper - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def mfcc(frames: np.ndarray, sample_rate: int, n_mels: int = 26, n_coeffs: int = 13) -> np.ndarray:
    """
    Mel-frequency cepstral coefficients per frame.

    Each frame: Hann window, power spectrum, mel filterbank, log(energy + 1e-10),
    orthonormal DCT-II, first n_coeffs coefficients.

    Returns:
        Array of shape (n_frames, n_coeffs)
    """
    if n_coeffs > n_mels:
        raise ConfigError(f"n_coeffs ({n_coeffs}) cannot exceed n_mels ({n_mels})")
    if sample_rate < AUDIO_SETTINGS["min_sample_rate"]:
        raise ConfigError(f"sample rate {sample_rate} Hz is below {AUDIO_SETTINGS['min_sample_rate']} Hz")
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    frame_len = frames.shape[1]
    fft_size = fft_size_for(frame_len)

    windowed = frames * np.hanning(frame_len)
    power = np.abs(np.fft.rfft(windowed, n=fft_size, axis=1)) ** 2 / fft_size
    energies = power @ mel_filterbank(n_mels, fft_size, sample_rate).T
    return dct(np.log(energies + LOG_FLOOR), type=2, norm="ortho", axis=1)[:, :n_coeffs]


def pitch_autocorr(
    frame: np.ndarray,
    sample_rate: int,
    f_min: float = 60.0,
    f_max: float = 400.0,
    threshold: float = 0.3,
) -> float:
    """
    Fundamental frequency by normalized autocorrelation.

    The lag search covers [sample_rate / f_max, sample_rate / f_min], clamped
    to half the frame so every lag has enough overlap.

    Returns:
        f0 in Hz, or 0.0 when the best peak is below `threshold` (unvoiced)
    """
    frame = np.asarray(frame, dtype=np.float64)
    n = frame.size
    min_lag = max(1, int(np.floor(sample_rate / f_max)))
    max_lag = min(int(np.ceil(sample_rate / f_min)), n // 2)
    if max_lag < min_lag:
        return 0.0

    best_lag = 0
    best_r = -np.inf
    for lag in range(min_lag, max_lag + 1):
        head = frame[:n - lag]
        tail = frame[lag:]
        denom = np.sqrt(np.dot(head, head) * np.dot(tail, tail))
        if denom <= 0.0:
            continue
        r = np.dot(head, tail) / denom
        if r > best_r:
            best_r = r
            best_lag = lag

    if best_lag == 0 or best_r < threshold:
        return 0.0
    return sample_rate / best_lag


def frame_features(signal: PcmSignal) -> np.ndarray:
    """
    Per-frame [13 MFCCs, pitch, rms] at the configured analysis rate.

    hop = sample_rate / 50, frame_len = 2 * hop.
    """
    hop = signal.sample_rate // AUDIO_SETTINGS["frame_rate"]
    if hop < 1:
        raise ValidationError(f"sample rate {signal.sample_rate} Hz is too low for framing")
    frames = frame_signal(signal, frame_len=2 * hop, hop=hop)

    coeffs = mfcc(
        frames,
        signal.sample_rate,
        n_mels=AUDIO_SETTINGS["n_mels"],
        n_coeffs=AUDIO_SETTINGS["n_coeffs"],
    )
    pitch = np.array([
        pitch_autocorr(
            frame,
            signal.sample_rate,
            f_min=AUDIO_SETTINGS["pitch_min_hz"],
            f_max=AUDIO_SETTINGS["pitch_max_hz"],
            threshold=AUDIO_SETTINGS["voicing_threshold"],
        )
        for frame in frames
    ])
    rms = np.sqrt(np.mean(frames ** 2, axis=1))
    return np.column_stack([coeffs, pitch, rms])


def functionals(rows: np.ndarray) -> np.ndarray:
    """Mean, population std, min and max of each column, functional-major."""
    return np.concatenate([
        rows.mean(axis=0),
        rows.std(axis=0),
        rows.min(axis=0),
        rows.max(axis=0),
    ])


def extract_audio_features(signal: PcmSignal) -> FeatureVector:
    """
    Fixed-length 60-dim audio descriptor of a signal.

    The ordering is frozen; see audio_feature_names().
    """
    rows = frame_features(signal)
    logger.debug(f"Extracted {rows.shape[0]} frames at {signal.sample_rate} Hz")
    values = functionals(rows)
    return FeatureVector(values=values, spans={"audio": (0, values.size)})
