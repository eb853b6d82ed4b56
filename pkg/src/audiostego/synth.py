"""Synthetic desk-scale data: speech-like clips and smooth cover images.

Real corpora are deliberately not bundled; these generators produce
material with the same gross statistics (harmonic voiced audio with
envelopes and onset/offset silence, piecewise-smooth photos) for tests,
demos, and the overfit experiments.
"""

from __future__ import annotations

import numpy as np

from .audio import DEFAULT_SAMPLE_RATE, PCM_FULL_SCALE, AudioClip


def speech_like(rng: np.random.Generator, n_samples: int = 64000, sample_rate: int = DEFAULT_SAMPLE_RATE) -> AudioClip:
    """A voiced, gliding harmonic tone with syllable-rate amplitude movement."""
    t = np.arange(n_samples) / sample_rate
    f0 = rng.uniform(90.0, 280.0)
    glide = rng.uniform(-0.3, 0.3)
    phase = 2.0 * np.pi * np.cumsum(f0 * (1.0 + glide * t / t[-1])) / sample_rate
    x = np.zeros(n_samples)
    for harmonic in range(1, int(rng.integers(3, 7))):
        x += rng.uniform(0.2, 1.0) / harmonic * np.sin(harmonic * phase + rng.uniform(0, 2 * np.pi))
    syllable = 0.55 + 0.45 * np.sin(2 * np.pi * rng.uniform(1.5, 5.0) * t + rng.uniform(0, 2 * np.pi))
    x *= syllable
    x += 0.01 * rng.standard_normal(n_samples)
    # quiet onset/offset, like a recorded utterance
    edge = min(400, n_samples // 4)
    ramp = np.linspace(0.0, 1.0, edge)
    x[:edge] *= ramp
    x[-edge:] *= ramp[::-1]
    x *= 0.6 / np.max(np.abs(x))
    return AudioClip(
        samples=np.clip(np.rint(x * PCM_FULL_SCALE), -PCM_FULL_SCALE, PCM_FULL_SCALE - 1).astype(np.int16),
        sample_rate=sample_rate,
    )


def smooth_image(rng: np.random.Generator, side: int = 255) -> np.ndarray:
    """Bilinearly upsampled random color field: photo-smooth, in [0.02, 0.98]."""
    knots = 9
    base = rng.random((knots, knots, 3))
    xi = np.linspace(0, knots - 1, side)
    lo = np.floor(xi).astype(int)
    hi = np.minimum(lo + 1, knots - 1)
    frac = xi - lo
    rows = (
        base[lo] * (1 - frac)[:, None, None] + base[hi] * frac[:, None, None]
    )
    img = (
        rows[:, lo] * (1 - frac)[None, :, None] + rows[:, hi] * frac[None, :, None]
    )
    return np.clip(img, 0.02, 0.98)
