"""audiostego: hide audio clips inside images.

Two codecs share one three-network convolutional architecture: ``raw``
packs up to 12.19 s of 16 kHz PCM into a 255x255 color image, ``stft``
hides a 4.0 s spectrogram.  A classical k-LSB embedder and the matching
fidelity metrics (per-pixel MSE, SSE over sets, Pearson correlation) ship
alongside for comparison.

Planar tensors are plain numpy float arrays shaped (height, width,
channels) throughout.
"""

from .audio import (
    DEFAULT_SAMPLE_RATE,
    RAW_CAPACITY_SAMPLES,
    AudioClip,
    denormalize_raw,
    fit_to_capacity,
    load_wav,
    normalize_raw,
    save_wav,
)
from .errors import (
    ArchitectureMismatchError,
    CapacityError,
    DataError,
    StegoError,
    TrainingError,
    UsageError,
    WeightsFormatError,
)
from .lsb import lsb_capacity, lsb_capacity_samples, lsb_embed, lsb_extract
from .methods import Method, get_method
from .metrics import (
    MetricsReport,
    mse_per_pixel_per_channel,
    pearson,
    rms_error,
    spectrogram_diff_image,
    sse_over_set,
)
from .spectral import STFT_CAPACITY_SAMPLES, StftParams, boundary_fade, istft, istft_waveform, stft
from .stegonet import (
    BaseNetwork,
    ModelWeights,
    NetworkConfig,
    StegoModel,
    base_forward,
    init_weights,
    load_weights,
    save_weights,
)
from .training import (
    DataSplit,
    LossWeights,
    OverfitResult,
    TrainConfig,
    TrainResult,
    joint_loss,
    overfit_pairs,
    split_dataset,
    train,
)

__version__ = "0.1.0"
