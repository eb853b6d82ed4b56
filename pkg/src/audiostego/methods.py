"""The two audio representations and their capacities.

``raw`` packs 12.19 s of PCM straight into a 255x255x3 tensor; ``stft``
turns 4.0 s into a 255x255x2 complex spectrogram.  Both directions are
wrapped here so encode, decode, training, and evaluation agree on shapes
and on the decode-side edge handling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import audio as audio_mod
from . import spectral
from .audio import AudioClip
from .errors import DataError

IMAGE_SIDE = audio_mod.IMAGE_SIDE


@dataclass(frozen=True)
class Method:
    name: str
    capacity_samples: int
    tensor_channels: int

    @property
    def capacity_seconds(self) -> float:
        return self.capacity_samples / audio_mod.DEFAULT_SAMPLE_RATE

    def audio_to_tensor(self, clip: AudioClip) -> np.ndarray:
        """Capacity-length clip -> 255x255xC tensor."""
        if self.name == "raw":
            return audio_mod.normalize_raw(clip)
        return spectral.stft(clip, spectral.StftParams())

    def tensor_to_audio(self, tensor: np.ndarray, smooth_edges: bool = True) -> AudioClip:
        """Decoded tensor -> PCM clip.

        For the spectrogram method, ``smooth_edges`` fades the first/last
        hop of samples, where the analysis window grid has almost no
        coverage and decode noise comes out hugely amplified.  Exact
        inverse transforms of true spectrograms do not need the fade.
        """
        if self.name == "raw":
            return audio_mod.denormalize_raw(tensor)
        params = spectral.StftParams()
        waveform = spectral.istft_waveform(tensor, params)
        if smooth_edges:
            waveform = waveform * spectral.boundary_fade(len(waveform), params.hop)
        pcm = np.clip(
            np.rint(waveform * audio_mod.PCM_FULL_SCALE),
            -audio_mod.PCM_FULL_SCALE,
            audio_mod.PCM_FULL_SCALE - 1,
        )
        return AudioClip(samples=pcm.astype(np.int16), sample_rate=audio_mod.DEFAULT_SAMPLE_RATE)


METHODS = {
    "raw": Method("raw", audio_mod.RAW_CAPACITY_SAMPLES, 3),
    "stft": Method("stft", spectral.STFT_CAPACITY_SAMPLES, 2),
}


def get_method(name: str) -> Method:
    try:
        return METHODS[name]
    except KeyError:
        raise DataError(f"unknown method {name!r} (expected 'raw' or 'stft')") from None
