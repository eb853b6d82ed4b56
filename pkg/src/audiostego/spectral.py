"""Method-2: short-time Fourier analysis of a 4 s clip onto a 255x255x2 grid.

The default parameters are the unique sensible family for this mapping:
fft_size 508 gives 508/2 + 1 = 255 frequency rows, and hop 250 over a
64,000-sample (4.0 s at 16 kHz) clip gives 255 frames.  255 frames at hop
250 span 508 + 254*250 = 64,008 samples, eight more than the clip, so the
signal is zero-padded by four samples on each side before framing.  The
inverse uses weighted overlap-add with window-squared normalization, which
reconstructs the padded signal exactly for any unmodified spectrogram.

Channel 0 holds real parts, channel 1 imaginary parts; both are scaled by
1/fft_size to keep values in a range comparable to [-1, 1] speech.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import DEFAULT_SAMPLE_RATE, PCM_FULL_SCALE, AudioClip
from .errors import DataError

STFT_CAPACITY_SAMPLES = 64000

# Window-squared coverage below this is treated as no coverage at all;
# overlap-add cannot recover such samples.
_COVERAGE_TOL = 1e-10


@dataclass(frozen=True)
class StftParams:
    """Analysis/synthesis grid: FFT size, hop, window kind, clip length."""

    fft_size: int = 508
    hop: int = 250
    window: str = "hann"
    expected_samples: int = STFT_CAPACITY_SAMPLES

    def __post_init__(self):
        if self.fft_size < 2 or self.fft_size % 2 != 0:
            raise DataError("fft_size must be a positive even number")
        if self.hop < 1 or self.hop > self.fft_size:
            raise DataError("hop must satisfy 1 <= hop <= fft_size (overlap keeps the inverse stable)")
        if self.window != "hann":
            raise DataError(f"unsupported window kind {self.window!r}")
        if self.expected_samples < 1:
            raise DataError("expected_samples must be positive")

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def frames(self) -> int:
        if self.expected_samples <= self.fft_size:
            return 1
        return 1 + -(-(self.expected_samples - self.fft_size) // self.hop)  # ceil division

    def padding(self) -> tuple[int, int]:
        """Zero-padding (left, right) that centers the clip on the frame grid."""
        span = self.fft_size + (self.frames - 1) * self.hop
        left = (span - self.expected_samples) // 2
        return left, span - self.expected_samples - left

    def window_values(self) -> np.ndarray:
        n = np.arange(self.fft_size)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / self.fft_size))


def stft(clip: AudioClip, params: StftParams | None = None) -> np.ndarray:
    """Transform a clip into a (bins, frames, 2) real/imaginary tensor.

    With default params a 64,000-sample clip lands exactly on 255x255x2.
    """
    params = params or StftParams()
    if len(clip) != params.expected_samples:
        raise DataError(
            f"clip has {len(clip)} samples, params expect {params.expected_samples}; "
            "call fit_to_capacity first"
        )
    left, right = params.padding()
    padded = np.concatenate(
        [np.zeros(left), clip.as_float(), np.zeros(right)]
    )
    window = params.window_values()
    starts = params.hop * np.arange(params.frames)
    segments = padded[starts[:, None] + np.arange(params.fft_size)[None, :]] * window
    spectrum = np.fft.rfft(segments, axis=1) / params.fft_size  # (frames, bins)
    tensor = np.empty((params.bins, params.frames, 2))
    tensor[:, :, 0] = spectrum.real.T
    tensor[:, :, 1] = spectrum.imag.T
    return tensor


def istft(tensor: np.ndarray, params: StftParams | None = None) -> AudioClip:
    """Invert :func:`stft` by weighted overlap-add, returning a PCM-16 clip.

    Each frame is inverse-transformed, multiplied by the analysis window,
    accumulated, and divided by the accumulated squared window.  Float
    output is rounded and clamped into int16 range.
    """
    waveform = istft_waveform(tensor, params)
    pcm = np.clip(np.rint(waveform * PCM_FULL_SCALE), -PCM_FULL_SCALE, PCM_FULL_SCALE - 1)
    return AudioClip(samples=pcm.astype(np.int16), sample_rate=DEFAULT_SAMPLE_RATE)


def istft_waveform(tensor: np.ndarray, params: StftParams | None = None) -> np.ndarray:
    """Overlap-add reconstruction as float64 in [-1, 1) scale (pre-quantization)."""
    params = params or StftParams()
    tensor = np.asarray(tensor, dtype=np.float64)
    expected_shape = (params.bins, params.frames, 2)
    if tensor.shape != expected_shape:
        raise DataError(f"expected tensor of shape {expected_shape}, got {tensor.shape}")
    spectrum = (tensor[:, :, 0] + 1j * tensor[:, :, 1]).T * params.fft_size
    segments = np.fft.irfft(spectrum, n=params.fft_size, axis=1)
    window = params.window_values()
    span = params.fft_size + (params.frames - 1) * params.hop
    acc = np.zeros(span)
    coverage = np.zeros(span)
    for frame in range(params.frames):
        start = frame * params.hop
        acc[start : start + params.fft_size] += segments[frame] * window
        coverage[start : start + params.fft_size] += window * window
    left, _ = params.padding()
    acc = acc[left : left + params.expected_samples]
    coverage = coverage[left : left + params.expected_samples]
    bad = np.flatnonzero(coverage < _COVERAGE_TOL)
    if bad.size:
        raise DataError(
            f"degenerate window coverage at sample {int(bad[0])}: "
            "sum of squared windows is below tolerance, overlap-add cannot normalize"
        )
    return acc / coverage


def boundary_fade(n_samples: int, ramp: int) -> np.ndarray:
    """Linear fade-in/out envelope used on decoded audio.

    The first and last frames of the grid cover the clip boundaries with
    near-zero window weight, so spectrogram noise from a lossy decode is
    amplified hugely there.  A short boundary fade suppresses those spikes;
    it is applied to decoder output only, never inside :func:`istft`.
    """
    ramp = min(ramp, n_samples // 2)
    envelope = np.ones(n_samples)
    if ramp > 0:
        slope = np.linspace(0.0, 1.0, ramp, endpoint=False)
        envelope[:ramp] = slope
        envelope[-ramp:] = slope[::-1]
    return envelope
