"""Classical k-LSB steganography baseline.

The payload is self-describing: a 32-bit big-endian header holding the body
length in bits, followed by the PCM-16 samples, most significant bit first.
Bits are written row-major, channel-fastest, filling all k planes of a
channel value (highest of the k planes first) before moving to the next.
Extraction therefore needs nothing but the container and k.
"""

from __future__ import annotations

import numpy as np

from .audio import DEFAULT_SAMPLE_RATE, AudioClip
from .errors import CapacityError, DataError

HEADER_BITS = 32


def _check_k(k: int) -> None:
    if not 1 <= k <= 8:
        raise DataError(f"k must be between 1 and 8 bits per channel, got {k}")


def _check_cover(cover: np.ndarray) -> np.ndarray:
    cover = np.asarray(cover)
    if cover.dtype != np.uint8 or cover.ndim != 3 or cover.shape[2] != 3:
        raise DataError("cover must be a uint8 array of shape (height, width, 3)")
    return cover


def lsb_capacity(height: int, width: int, k: int) -> int:
    """Payload capacity in bits after the 32-bit header; 0 if the header alone does not fit."""
    _check_k(k)
    total = height * width * 3 * k
    return max(total - HEADER_BITS, 0)


def lsb_capacity_samples(height: int, width: int, k: int) -> int:
    """Capacity expressed in whole PCM-16 samples."""
    return lsb_capacity(height, width, k) // 16


def _planes(values: np.ndarray, k: int) -> np.ndarray:
    """k bit-planes of each value, highest of the k planes first: shape (n, k)."""
    shifts = np.arange(k - 1, -1, -1, dtype=np.uint8)
    return (values[:, None] >> shifts[None, :]) & 1


def lsb_embed(cover: np.ndarray, clip: AudioClip, k: int) -> np.ndarray:
    """Embed the clip into the k lowest bits of each channel value.

    Higher bits are untouched; channel values past the payload keep their
    original low bits too.
    """
    _check_k(k)
    cover = _check_cover(cover)
    body = np.unpackbits(clip.samples.astype(">i2").view(np.uint8))
    header = np.unpackbits(np.array([len(body)], dtype=">u4").view(np.uint8))
    stream = np.concatenate([header, body]).astype(np.uint8)

    flat = cover.reshape(-1)
    available = flat.size * k
    if len(stream) > available:
        raise CapacityError(
            f"payload needs {len(stream)} bits but a {cover.shape[0]}x{cover.shape[1]} "
            f"cover at k={k} offers {available}"
        )
    n_positions = -(-len(stream) // k)
    used = flat[:n_positions]
    bit_matrix = _planes(used, k)  # start from existing bits so a partial tail is a no-op
    bit_matrix.reshape(-1)[: len(stream)] = stream
    shifts = np.arange(k - 1, -1, -1, dtype=np.uint8)
    low = (bit_matrix << shifts[None, :]).sum(axis=1).astype(np.uint8)
    mask = np.uint8((0xFF >> k) << k)
    out = flat.copy()
    out[:n_positions] = (used & mask) | low
    return out.reshape(cover.shape)


def lsb_extract(container: np.ndarray, k: int, sample_rate: int = DEFAULT_SAMPLE_RATE) -> AudioClip:
    """Recover the embedded clip from a container produced with the same k."""
    _check_k(k)
    container = _check_cover(container)
    flat = container.reshape(-1)
    available = flat.size * k
    if available < HEADER_BITS:
        raise DataError("container too small to hold the length header")

    header_positions = -(-HEADER_BITS // k)
    header_bits = _planes(flat[:header_positions], k).reshape(-1)[:HEADER_BITS]
    body_len = int(np.packbits(header_bits).view(">u4")[0])
    if body_len > available - HEADER_BITS:
        raise DataError(
            f"header claims {body_len} payload bits but only {available - HEADER_BITS} fit: "
            "wrong k or not an LSB container"
        )
    if body_len % 16 != 0:
        raise DataError(
            f"header claims {body_len} payload bits, not a whole number of PCM-16 samples: "
            "wrong k or not an LSB container"
        )
    total_bits = HEADER_BITS + body_len
    n_positions = -(-total_bits // k)
    bits = _planes(flat[:n_positions], k).reshape(-1)[HEADER_BITS:total_bits]
    samples = np.packbits(bits).view(">i2").astype(np.int16)
    return AudioClip(samples=samples, sample_rate=sample_rate)
