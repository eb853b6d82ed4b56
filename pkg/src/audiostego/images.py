"""Image I/O helpers: lossless PNG round trips and ingestion resizing.

Containers carry payloads in tiny pixel perturbations (or, for the LSB
baseline, literally in the low bits), so every write goes through a
lossless format.  Anything else destroys the payload and is refused.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError, UsageError

LOSSLESS_SUFFIXES = {".png"}


def require_lossless(path) -> Path:
    path = Path(path)
    if path.suffix.lower() not in LOSSLESS_SUFFIXES:
        raise UsageError(
            f"{path}: refusing lossy or unknown image format for container output; use .png"
        )
    return path


def load_image(path) -> np.ndarray:
    """Read an image as uint8 RGB (height, width, 3)."""
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            return np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise DataError(f"{path}: cannot decode image ({exc})") from exc


def save_image(path, values: np.ndarray) -> None:
    """Write uint8 pixels (RGB or single-channel grayscale) as PNG."""
    path = require_lossless(path)
    values = np.asarray(values)
    if values.dtype != np.uint8:
        raise DataError("save_image expects uint8 pixel values")
    if values.ndim == 3 and values.shape[2] == 1:
        values = values[:, :, 0]
    mode = "RGB" if values.ndim == 3 else "L"
    Image.fromarray(values, mode=mode).save(path, format="PNG")


def resize_rgb(pixels: np.ndarray, side: int) -> np.ndarray:
    """Bilinear resize to side x side."""
    img = Image.fromarray(pixels, mode="RGB")
    return np.asarray(img.resize((side, side), Image.BILINEAR), dtype=np.uint8)


def to_float(pixels: np.ndarray) -> np.ndarray:
    """uint8 [0, 255] -> float64 [0, 1]."""
    return np.asarray(pixels, dtype=np.float64) / 255.0


def to_bytes(values: np.ndarray) -> np.ndarray:
    """float [0, 1] -> uint8 with rounding; out-of-range values are clipped."""
    return np.clip(np.rint(np.asarray(values, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def quantize(values: np.ndarray) -> np.ndarray:
    """Round a float image through the 8-bit grid and back to float [0, 1]."""
    return to_float(to_bytes(values))
