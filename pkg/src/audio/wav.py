"""
RIFF/WAVE PCM 16-bit reader and writer.
"""
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from src.errors import DataFormatError, ValidationError

logger = logging.getLogger(__name__)

PCM_SCALE = 32768.0


@dataclass(frozen=True)
class PcmSignal:
    """Mono PCM signal with samples in [-1, 1]."""
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValidationError(f"sample rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError("PCM samples must be one-dimensional")
        if samples.size and (samples.min() < -1.0 or samples.max() > 1.0):
            raise ValidationError("PCM samples must lie in [-1, 1]")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def read_wav(data: Union[bytes, str, Path]) -> PcmSignal:
    """
    Parse a RIFF/WAVE file holding 16-bit PCM.

    Args:
        data: Raw file bytes or a path

    Returns:
        PcmSignal, stereo downmixed by channel average

    Raises:
        DataFormatError: Bad magic, unsupported encoding or truncated chunks
    """
    if isinstance(data, (str, Path)):
        data = Path(data).read_bytes()

    if len(data) < 12:
        raise DataFormatError("file too short for a RIFF header", offset=len(data))
    if data[0:4] != b"RIFF":
        raise DataFormatError(f"bad RIFF magic {data[0:4]!r}", offset=0)
    if data[8:12] != b"WAVE":
        raise DataFormatError(f"bad WAVE magic {data[8:12]!r}", offset=8)

    fmt = None
    pcm = None
    offset = 12
    while offset + 8 <= len(data):
        chunk_id = data[offset:offset + 4]
        (chunk_size,) = struct.unpack_from("<I", data, offset + 4)
        body = offset + 8
        if body + chunk_size > len(data):
            raise DataFormatError(f"chunk {chunk_id!r} truncated", offset=offset)

        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise DataFormatError("fmt chunk shorter than 16 bytes", offset=offset)
            audio_format, channels, sample_rate, byte_rate, block_align, bits = struct.unpack_from(
                "<HHIIHH", data, body
            )
            if audio_format != 1:
                raise DataFormatError(f"unsupported encoding {audio_format} (PCM only)", offset=body)
            if bits != 16:
                raise DataFormatError(f"unsupported sample width {bits} bits", offset=body + 14)
            if channels not in (1, 2):
                raise DataFormatError(f"unsupported channel count {channels}", offset=body + 2)
            if block_align != channels * 2:
                raise DataFormatError(f"inconsistent block align {block_align}", offset=body + 12)
            fmt = (channels, sample_rate)
        elif chunk_id == b"data":
            if fmt is None:
                raise DataFormatError("data chunk before fmt chunk", offset=offset)
            channels = fmt[0]
            if chunk_size % (2 * channels):
                raise DataFormatError("data chunk ends mid-frame", offset=body + chunk_size)
            pcm = np.frombuffer(data, dtype="<i2", count=chunk_size // 2, offset=body)
            break

        # chunks are word aligned
        offset = body + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise DataFormatError("missing fmt chunk", offset=offset)
    if pcm is None:
        raise DataFormatError("missing data chunk", offset=offset)

    channels, sample_rate = fmt
    samples = pcm.astype(np.float64) / PCM_SCALE
    if channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1)
    logger.debug(f"Read WAV: {sample_rate} Hz, {channels} ch, {samples.size} frames")
    return PcmSignal(sample_rate=sample_rate, samples=samples)


def encode_wav(samples: np.ndarray, sample_rate: int, channels: int = 1) -> bytes:
    """
    Encode float samples as 16-bit PCM WAVE bytes.

    Args:
        samples: Shape (n,) for mono or (n, channels) for interleaving
        sample_rate: Rate in Hz
        channels: 1 or 2

    Returns:
        Complete RIFF file bytes
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = np.repeat(samples[:, None], channels, axis=1)
    if samples.shape[1] != channels:
        raise ValidationError(f"expected {channels} channels, got {samples.shape[1]}")
    pcm = np.clip(np.round(samples * PCM_SCALE), -32768, 32767).astype("<i2")
    payload = pcm.tobytes()

    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<IHHIIHH", 16, 1, channels, sample_rate, sample_rate * channels * 2, channels * 2, 16)
    data = b"data" + struct.pack("<I", len(payload)) + payload
    return header + fmt + data


def write_wav(signal: PcmSignal, path: Union[str, Path], channels: int = 1) -> Path:
    """Write a PcmSignal to disk as 16-bit PCM."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_wav(signal.samples, signal.sample_rate, channels))
    return path
