import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def speech_clips(rng):
    from audiostego.synth import speech_like

    return [speech_like(rng) for _ in range(5)]
