import numpy as np
import pytest

from audiostego import DataError, UsageError
from audiostego.images import (
    load_image,
    quantize,
    require_lossless,
    resize_rgb,
    save_image,
    to_bytes,
    to_float,
)


def test_png_roundtrip_exact(tmp_path, rng):
    pixels = rng.integers(0, 256, size=(31, 17, 3), dtype=np.uint8)
    save_image(tmp_path / "x.png", pixels)
    assert np.array_equal(load_image(tmp_path / "x.png"), pixels)


def test_lossy_extension_refused(tmp_path, rng):
    pixels = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
    for name in ("x.jpg", "x.jpeg", "x.webp", "x.bin"):
        with pytest.raises(UsageError, match="lossy"):
            save_image(tmp_path / name, pixels)


def test_grayscale_promoted_to_rgb(tmp_path):
    from PIL import Image

    Image.fromarray(np.arange(64, dtype=np.uint8).reshape(8, 8), mode="L").save(tmp_path / "g.png")
    pixels = load_image(tmp_path / "g.png")
    assert pixels.shape == (8, 8, 3)
    assert np.array_equal(pixels[:, :, 0], pixels[:, :, 1])


def test_corrupt_image_is_data_error(tmp_path):
    (tmp_path / "bad.png").write_bytes(b"not a png at all")
    with pytest.raises(DataError, match="cannot decode"):
        load_image(tmp_path / "bad.png")


def test_resize_contract(rng):
    pixels = rng.integers(0, 256, size=(384, 512, 3), dtype=np.uint8)
    assert resize_rgb(pixels, 255).shape == (255, 255, 3)


def test_float_byte_roundtrip(rng):
    pixels = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
    assert np.array_equal(to_bytes(to_float(pixels)), pixels)


def test_to_bytes_clips_overshoot():
    values = np.array([[[-0.2, 0.5, 1.7]]])
    assert to_bytes(values).tolist() == [[[0, 128, 255]]]


def test_quantize_is_idempotent(rng):
    values = rng.random((9, 9, 3))
    once = quantize(values)
    assert np.array_equal(quantize(once), once)
    assert np.abs(once - values).max() <= 0.5 / 255

def test_require_lossless_passes_png():
    assert require_lossless("dir/container.PNG").suffix == ".PNG"
