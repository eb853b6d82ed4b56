"""PCM-16 audio handling and the raw-sample image packing (Method-1).

An :class:`AudioClip` is mono 16-bit PCM at a fixed sample rate (16 kHz by
default).  Method-1 packs 255*255*3 = 195,075 samples into an image-shaped
tensor: each sample is mapped through a fixed affine transform into [0, 1)
and laid out channel-fastest, row-major.  The transform is exactly
invertible, so no side information is needed to decode.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np

from .errors import DataError

DEFAULT_SAMPLE_RATE = 16000
IMAGE_SIDE = 255
RAW_CAPACITY_SAMPLES = IMAGE_SIDE * IMAGE_SIDE * 3  # 195,075
PCM_FULL_SCALE = 32768  # |int16 minimum|


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM-16 clip: int16 samples plus their sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.dtype != np.int16:
            if not np.issubdtype(samples.dtype, np.integer):
                raise DataError("AudioClip samples must be integers (PCM-16)")
            if samples.size and (samples.min() < -PCM_FULL_SCALE or samples.max() > PCM_FULL_SCALE - 1):
                raise DataError("AudioClip samples out of int16 range")
            samples = samples.astype(np.int16)
        if samples.ndim != 1:
            raise DataError("AudioClip samples must be one-dimensional (mono)")
        if self.sample_rate <= 0:
            raise DataError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def as_float(self) -> np.ndarray:
        """Samples scaled to [-1, 1) float64."""
        return self.samples.astype(np.float64) / PCM_FULL_SCALE


def load_wav(path, expected_rate: int = DEFAULT_SAMPLE_RATE) -> AudioClip:
    """Read a PCM-16 WAV file as a mono clip.

    Multi-channel audio is mixed down by per-frame integer averaging.  No
    resampling is performed: a rate other than ``expected_rate`` is an
    error, so fidelity numbers stay honest.
    """
    try:
        with wave.open(str(path), "rb") as wav:
            n_channels = wav.getnchannels()
            sample_width = wav.getsampwidth()
            rate = wav.getframerate()
            n_frames = wav.getnframes()
            raw = wav.readframes(n_frames)
    except (wave.Error, EOFError, OSError) as exc:
        raise DataError(f"{path}: not a readable WAV file ({exc})") from exc
    if sample_width != 2:
        raise DataError(f"{path}: not PCM-16 (sample width {sample_width} bytes)")
    if rate != expected_rate:
        raise DataError(
            f"{path}: sample-rate mismatch (file {rate} Hz, expected {expected_rate} Hz; "
            "no resampling is performed)"
        )
    data = np.frombuffer(raw, dtype="<i2")
    if n_channels > 1:
        data = data.reshape(-1, n_channels)
        # integer average, truncating toward minus infinity like // does
        data = (data.astype(np.int32).sum(axis=1) // n_channels).astype(np.int16)
    return AudioClip(samples=data.astype(np.int16), sample_rate=rate)


def save_wav(path, clip: AudioClip) -> None:
    """Write a clip as mono PCM-16 little-endian WAV."""
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(clip.sample_rate)
        wav.writeframes(clip.samples.astype("<i2").tobytes())


def fit_to_capacity(clip: AudioClip, capacity: int) -> AudioClip:
    """Truncate or zero-pad the clip so its length equals ``capacity``."""
    if capacity <= 0:
        raise DataError("capacity must be positive")
    samples = clip.samples
    if len(samples) >= capacity:
        fitted = samples[:capacity]
    else:
        fitted = np.zeros(capacity, dtype=np.int16)
        fitted[: len(samples)] = samples
    return AudioClip(samples=fitted, sample_rate=clip.sample_rate)


def normalize_raw(clip: AudioClip) -> np.ndarray:
    """Pack a 195,075-sample clip into a 255x255x3 tensor in [0, 1).

    Each sample x maps to (x/32768 + 1)/2.  Both steps are exact in
    float64, so the inverse transform recovers the samples bit-exactly.
    Samples fill the tensor channel-fastest: sample i lands at
    (i // 765, (i // 3) % 255, i % 3).
    """
    if len(clip) != RAW_CAPACITY_SAMPLES:
        raise DataError(
            f"raw packing needs exactly {RAW_CAPACITY_SAMPLES} samples, got {len(clip)}; "
            "call fit_to_capacity first"
        )
    values = (clip.as_float() + 1.0) / 2.0
    return values.reshape(IMAGE_SIDE, IMAGE_SIDE, 3)


def denormalize_raw(tensor: np.ndarray, sample_rate: int = DEFAULT_SAMPLE_RATE) -> AudioClip:
    """Invert :func:`normalize_raw`, clamping out-of-range network outputs."""
    tensor = np.asarray(tensor, dtype=np.float64)
    if tensor.shape != (IMAGE_SIDE, IMAGE_SIDE, 3):
        raise DataError(f"expected a {IMAGE_SIDE}x{IMAGE_SIDE}x3 tensor, got {tensor.shape}")
    raw = np.rint((2.0 * tensor - 1.0) * PCM_FULL_SCALE)
    raw = np.clip(raw, -PCM_FULL_SCALE, PCM_FULL_SCALE - 1)
    return AudioClip(samples=raw.reshape(-1).astype(np.int16), sample_rate=sample_rate)
