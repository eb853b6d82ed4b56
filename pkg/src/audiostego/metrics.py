"""Fidelity metrics: per-pixel MSE, SSE over image sets, Pearson correlation.

Image metrics operate on the normalized [0, 1] pixel scale.  Audio
correlation of 1.0 means the revealed clip is an exact positive linear
image of the secret; constant sequences have no defined correlation and
raise instead of returning a junk value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioClip
from .errors import DataError
from .spectral import StftParams, stft


def mse_per_pixel_per_channel(cover: np.ndarray, container: np.ndarray) -> float:
    """Mean squared difference over all height*width*channel entries."""
    cover = np.asarray(cover, dtype=np.float64)
    container = np.asarray(container, dtype=np.float64)
    if cover.shape != container.shape:
        raise DataError(f"image shape mismatch: {cover.shape} vs {container.shape}")
    return float(np.mean((cover - container) ** 2))


def sse_over_set(pairs) -> float:
    """Sum of per-pair MSEs over a sequence of (cover, container) pairs."""
    pairs = list(pairs)
    if not pairs:
        raise DataError("sse_over_set needs at least one image pair")
    total = 0.0
    for index, (cover, container) in enumerate(pairs):
        try:
            total += mse_per_pixel_per_channel(cover, container)
        except DataError as exc:
            raise DataError(f"pair {index}: {exc}") from exc
    return total


def pearson(x, y) -> float:
    """Pearson correlation coefficient of two equal-length sequences."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise DataError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise DataError("correlation needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt((dx @ dx) * (dy @ dy))
    if denom == 0.0:
        raise DataError("correlation undefined: at least one sequence is constant")
    return float((dx @ dy) / denom)


def rms_error(x, y) -> float:
    """Root-mean-square difference; the fallback when correlation is undefined."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise DataError(f"length mismatch: {x.size} vs {y.size}")
    return float(np.sqrt(np.mean((x - y) ** 2)))


def spectrogram_diff_image(secret: AudioClip, revealed: AudioClip, params: StftParams | None = None) -> np.ndarray:
    """Grayscale picture of where the two clips' spectrograms disagree.

    Cell value = |magnitude(secret) - magnitude(revealed)|, log-compressed
    and min-max scaled into [0, 1].  Identical clips give an all-zero image.
    """
    params = params or StftParams()
    if len(secret) != len(revealed):
        raise DataError(f"length mismatch: {len(secret)} vs {len(revealed)} samples")
    s = stft(secret, params)
    r = stft(revealed, params)
    mag_s = np.hypot(s[:, :, 0], s[:, :, 1])
    mag_r = np.hypot(r[:, :, 0], r[:, :, 1])
    diff = np.log1p(np.abs(mag_s - mag_r) * params.fft_size)
    top = diff.max()
    if top > 0:
        diff = diff / top
    return diff[:, :, None]


@dataclass
class PairResult:
    """Per-pair evaluation record.  audio_r is None when correlation is undefined."""

    image_mse: float
    audio_r: float | None
    audio_rms: float | None = None


@dataclass
class MetricsReport:
    """SSE over an image-pair set plus per-pair and mean audio correlations."""

    per_pair: list[PairResult] = field(default_factory=list)

    def add(self, image_mse: float, audio_r: float | None, audio_rms: float | None = None) -> None:
        self.per_pair.append(PairResult(image_mse, audio_r, audio_rms))

    @property
    def pair_count(self) -> int:
        return len(self.per_pair)

    @property
    def sse(self) -> float:
        return float(sum(p.image_mse for p in self.per_pair))

    @property
    def mean_correlation(self) -> float:
        rs = [p.audio_r for p in self.per_pair if p.audio_r is not None]
        if not rs:
            return float("nan")
        return float(np.mean(rs))

    @property
    def undefined_correlations(self) -> int:
        return sum(1 for p in self.per_pair if p.audio_r is None)

    def key_values(self, prefix: str = "") -> dict[str, str]:
        kv = {
            f"{prefix}pair_count": str(self.pair_count),
            f"{prefix}sse": repr(self.sse),
            f"{prefix}mean_correlation": repr(self.mean_correlation),
            f"{prefix}undefined_correlations": str(self.undefined_correlations),
        }
        for i, p in enumerate(self.per_pair):
            kv[f"{prefix}pair{i}.image_mse"] = repr(p.image_mse)
            kv[f"{prefix}pair{i}.audio_r"] = "undefined" if p.audio_r is None else repr(p.audio_r)
            if p.audio_rms is not None:
                kv[f"{prefix}pair{i}.audio_rms"] = repr(p.audio_rms)
        return kv

    def format_text(self, title: str = "metrics") -> str:
        lines = [
            f"== {title} ==",
            f"pairs evaluated:   {self.pair_count}",
            f"SSE (sum of MSEs): {self.sse:.6g}",
            f"mean correlation:  {self.mean_correlation:.6g}",
        ]
        if self.undefined_correlations:
            lines.append(f"undefined correlations (constant audio): {self.undefined_correlations}")
        return "\n".join(lines)


def write_key_values(path, kv: dict[str, str]) -> None:
    with open(path, "w") as fh:
        for key, value in kv.items():
            fh.write(f"{key} = {value}\n")
