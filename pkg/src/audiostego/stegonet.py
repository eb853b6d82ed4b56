"""The three convolutional networks: prepare, hiding, and reveal.

All three share one base layout: three parallel branches of five stacked
same-padded convolutions (kernels 3x3, 4x4, 5x5, ReLU after each), channel
concatenation, three parallel single convolutions over the concatenation
(same kernels, ReLU), a second concatenation, and a final projection
convolution with a per-network output activation.  Spatial size is
preserved everywhere; the even 4x4 kernel pads 2 left/top and 1
right/bottom.

Weights are plain little-endian float32 numpy arrays in torch layout
(out_channels, in_channels, kh, kw), initialized He-uniform from a seeded
numpy generator so models are reproducible independent of the compute
backend.  torch supplies the convolution kernels and reverse-mode
differentiation; the architecture, initialization, serialization, and all
numeric contracts live here.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn.functional as Fnn
from torch import nn

from .errors import ArchitectureMismatchError, DataError, StegoError, WeightsFormatError

KERNEL_SIZES = (3, 4, 5)
BRANCH_DEPTH = 5
ACTIVATIONS = ("linear", "relu", "sigmoid")

WEIGHTS_MAGIC = b"ASTG"
WEIGHTS_VERSION = 1

# Secret-tensor gain per method.  Raw packing already fills [0, 1]; the
# 1/fft_size-scaled spectrograms are ~100x smaller than the image term,
# which starves the audio loss and stalls training (plain min-max style
# scaling is exactly what does not work here), so Method-2 secrets are
# scaled up before entering the networks and scaled back down on reveal.
DEFAULT_SECRET_GAIN = {"raw": 1.0, "stft": 64.0}


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture hyperparameters for one base-model instance."""

    input_channels: int
    output_channels: int
    feature_maps: int = 32
    kernel_sizes: tuple[int, ...] = KERNEL_SIZES
    branch_depth: int = BRANCH_DEPTH
    final_kernel: int = 3
    output_activation: str = "linear"

    def __post_init__(self):
        if tuple(self.kernel_sizes) != KERNEL_SIZES:
            raise DataError(f"kernel_sizes are fixed at {KERNEL_SIZES}")
        if self.branch_depth != BRANCH_DEPTH:
            raise DataError(f"branch_depth is fixed at {BRANCH_DEPTH}")
        if self.feature_maps < 1:
            raise DataError("feature_maps must be at least 1")
        if self.input_channels < 1 or self.output_channels < 1:
            raise DataError("channel counts must be positive")
        if self.final_kernel < 1:
            raise DataError("final_kernel must be positive")
        if self.output_activation not in ACTIVATIONS:
            raise DataError(f"output_activation must be one of {ACTIVATIONS}")
        object.__setattr__(self, "kernel_sizes", KERNEL_SIZES)

    def layer_shapes(self) -> dict[str, tuple[int, ...]]:
        """Parameter name -> shape for this config, in serialization order."""
        shapes: dict[str, tuple[int, ...]] = {}
        f = self.feature_maps
        for k in self.kernel_sizes:
            cin = self.input_channels
            for i in range(self.branch_depth):
                shapes[f"deep{k}.{i}.weight"] = (f, cin, k, k)
                shapes[f"deep{k}.{i}.bias"] = (f,)
                cin = f
        for k in self.kernel_sizes:
            shapes[f"mix{k}.weight"] = (f, 3 * f, k, k)
            shapes[f"mix{k}.bias"] = (f,)
        shapes["head.weight"] = (self.output_channels, 3 * f, self.final_kernel, self.final_kernel)
        shapes["head.bias"] = (self.output_channels,)
        return shapes


def _same_pad(kernel: int) -> tuple[int, int, int, int]:
    """F.pad argument order (left, right, top, bottom), preserving spatial size at stride 1."""
    before = kernel // 2
    after = kernel - 1 - before
    # even kernels: heavier padding on the left/top side
    return (before, after, before, after)


class _PaddedConv(nn.Module):
    def __init__(self, cin: int, cout: int, kernel: int):
        super().__init__()
        self.pad = _same_pad(kernel)
        self.conv = nn.Conv2d(cin, cout, kernel)

    def forward(self, x):
        return self.conv(Fnn.pad(x, self.pad))


class BaseNetwork(nn.Module):
    """torch realization of one base-model instance."""

    def __init__(self, config: NetworkConfig):
        super().__init__()
        self.config = config
        f = config.feature_maps
        self.deep = nn.ModuleDict(
            {
                str(k): nn.ModuleList(
                    [
                        _PaddedConv(config.input_channels if i == 0 else f, f, k)
                        for i in range(config.branch_depth)
                    ]
                )
                for k in config.kernel_sizes
            }
        )
        self.mix = nn.ModuleDict({str(k): _PaddedConv(3 * f, f, k) for k in config.kernel_sizes})
        self.head = _PaddedConv(3 * f, config.output_channels, config.final_kernel)

    def forward(self, x):
        stacks = []
        for k in self.config.kernel_sizes:
            h = x
            for layer in self.deep[str(k)]:
                h = torch.relu(layer(h))
            stacks.append(h)
        merged = torch.cat(stacks, dim=1)
        mixed = torch.cat(
            [torch.relu(self.mix[str(k)](merged)) for k in self.config.kernel_sizes], dim=1
        )
        out = self.head(mixed)
        if self.config.output_activation == "relu":
            out = torch.relu(out)
        elif self.config.output_activation == "sigmoid":
            # saturated logistics round to exactly 0/1 in finite precision;
            # nudge them off the endpoints so containers stay strictly inside
            eps = torch.finfo(out.dtype).eps
            out = torch.clamp(torch.sigmoid(out), min=eps, max=1.0 - eps)
        return out

    def named_params(self) -> dict[str, nn.Parameter]:
        params: dict[str, nn.Parameter] = {}
        for k in self.config.kernel_sizes:
            for i, layer in enumerate(self.deep[str(k)]):
                params[f"deep{k}.{i}.weight"] = layer.conv.weight
                params[f"deep{k}.{i}.bias"] = layer.conv.bias
        for k in self.config.kernel_sizes:
            params[f"mix{k}.weight"] = self.mix[str(k)].conv.weight
            params[f"mix{k}.bias"] = self.mix[str(k)].conv.bias
        params["head.weight"] = self.head.conv.weight
        params["head.bias"] = self.head.conv.bias
        return params

    def load_arrays(self, tensors: dict[str, np.ndarray]) -> None:
        with torch.no_grad():
            for name, param in self.named_params().items():
                if name not in tensors:
                    raise ArchitectureMismatchError(f"missing parameter {name}")
                arr = np.asarray(tensors[name])
                if tuple(arr.shape) != tuple(param.shape):
                    raise ArchitectureMismatchError(
                        f"architecture mismatch at {name}: weights {arr.shape} vs config {tuple(param.shape)}"
                    )
                param.copy_(torch.from_numpy(np.ascontiguousarray(arr)).to(param.dtype))

    def export_arrays(self) -> dict[str, np.ndarray]:
        return {
            name: param.detach().cpu().numpy().astype(np.float32)
            for name, param in self.named_params().items()
        }


NETWORK_ROLES = ("prepare", "hide", "reveal")


@dataclass
class ModelWeights:
    """All learnable parameters of the triple plus the architecture fingerprint."""

    configs: dict[str, NetworkConfig]
    tensors: dict[str, np.ndarray]
    method: str = "stft"
    secret_gain: float = 1.0

    def __post_init__(self):
        missing = [r for r in NETWORK_ROLES if r not in self.configs]
        if missing:
            raise DataError(f"configs missing networks: {missing}")
        for name, arr in self.tensors.items():
            if not np.all(np.isfinite(arr)):
                raise DataError(f"non-finite values in parameter {name}")
        self._check_shapes()

    def _check_shapes(self) -> None:
        for role in NETWORK_ROLES:
            for name, shape in self.configs[role].layer_shapes().items():
                key = f"{role}.{name}"
                if key not in self.tensors:
                    raise ArchitectureMismatchError(f"missing parameter {key}")
                if tuple(self.tensors[key].shape) != shape:
                    raise ArchitectureMismatchError(
                        f"architecture mismatch at {key}: "
                        f"stored {tuple(self.tensors[key].shape)}, fingerprint says {shape}"
                    )

    def fingerprint(self) -> dict:
        return {
            "method": self.method,
            "secret_gain": self.secret_gain,
            "configs": {role: asdict(self.configs[role]) for role in NETWORK_ROLES},
        }

    def slice(self, role: str) -> dict[str, np.ndarray]:
        prefix = role + "."
        return {n[len(prefix):]: a for n, a in self.tensors.items() if n.startswith(prefix)}


def init_weights(
    method: str = "stft",
    feature_maps: int = 32,
    seed: int = 0,
    secret_gain: float | None = None,
    final_kernel: int = 3,
) -> ModelWeights:
    """Fresh He-uniform weights for the given method.

    He-style fan-in scaling keeps activations alive through the deep ReLU
    stacks; weaker default schemes leave the 21-convolution pipeline unable
    to move off its initial plateau.
    """
    if method not in ("raw", "stft"):
        raise DataError(f"unknown method {method!r} (expected 'raw' or 'stft')")
    audio_channels = 3 if method == "raw" else 2
    configs = {
        "prepare": NetworkConfig(audio_channels, feature_maps, feature_maps,
                                 final_kernel=final_kernel, output_activation="relu"),
        "hide": NetworkConfig(3 + feature_maps, 3, feature_maps,
                              final_kernel=final_kernel, output_activation="sigmoid"),
        "reveal": NetworkConfig(3, audio_channels, feature_maps,
                                final_kernel=final_kernel, output_activation="linear"),
    }
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for role in NETWORK_ROLES:
        for name, shape in configs[role].layer_shapes().items():
            if name.endswith(".bias"):
                tensors[f"{role}.{name}"] = np.zeros(shape, dtype=np.float32)
            else:
                fan_in = shape[1] * shape[2] * shape[3]
                bound = np.sqrt(6.0 / fan_in)
                tensors[f"{role}.{name}"] = rng.uniform(-bound, bound, size=shape).astype(np.float32)
    if secret_gain is None:
        secret_gain = DEFAULT_SECRET_GAIN[method]
    return ModelWeights(configs=configs, tensors=tensors, method=method, secret_gain=secret_gain)


def _to_hwc(t: torch.Tensor) -> np.ndarray:
    return t.detach().squeeze(0).permute(1, 2, 0).cpu().numpy().astype(np.float64)


def _from_hwc(a: np.ndarray, dtype: torch.dtype) -> torch.Tensor:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 3:
        raise DataError(f"expected a (height, width, channels) tensor, got shape {a.shape}")
    return torch.from_numpy(np.ascontiguousarray(a.transpose(2, 0, 1))[None]).to(dtype)


class StegoModel:
    """Runtime wrapper over the prepare/hide/reveal triple.

    Planar numpy tensors (height, width, channels) at the boundary, torch
    inside.  A recorded forward pass enables :meth:`backward`.
    """

    def __init__(self, weights: ModelWeights, dtype: str = "float32"):
        self.method = weights.method
        self.secret_gain = float(weights.secret_gain)
        self.configs = dict(weights.configs)
        self.dtype = torch.float64 if dtype == "float64" else torch.float32
        self.nets: dict[str, BaseNetwork] = {}
        for role in NETWORK_ROLES:
            net = BaseNetwork(weights.configs[role]).to(self.dtype)
            net.load_arrays(weights.slice(role))
            self.nets[role] = net
        self._tape = None

    # -- forward surfaces ------------------------------------------------

    def _run(self, role: str, x: torch.Tensor) -> torch.Tensor:
        net = self.nets[role]
        if x.shape[1] != net.config.input_channels:
            raise DataError(
                f"{role} network expects {net.config.input_channels} channels, got {x.shape[1]}"
            )
        return net(x)

    def prepare_forward(self, audio_tensor: np.ndarray) -> np.ndarray:
        """Audio tensor (packed raw or spectrogram) -> feature stack."""
        x = _from_hwc(audio_tensor, self.dtype) * self.secret_gain
        with torch.no_grad():
            return _to_hwc(self._run("prepare", x))

    def hide_forward(self, cover: np.ndarray, features: np.ndarray) -> np.ndarray:
        """Cover image + audio features -> container image in (0, 1)."""
        c = _from_hwc(cover, self.dtype)
        if c.min() < 0.0 or c.max() > 1.0:
            raise DataError("cover values must lie in [0, 1]")
        f = _from_hwc(features, self.dtype)
        if c.shape[2:] != f.shape[2:]:
            raise DataError(f"cover {tuple(c.shape[2:])} and features {tuple(f.shape[2:])} sizes differ")
        with torch.no_grad():
            return _to_hwc(self._run("hide", torch.cat([c, f], dim=1)))

    def reveal_forward(self, container: np.ndarray) -> np.ndarray:
        """Container image -> decoded audio tensor (representation gain removed)."""
        x = _from_hwc(container, self.dtype)
        with torch.no_grad():
            return _to_hwc(self._run("reveal", x)) / self.secret_gain

    def encode_tensor(self, cover: np.ndarray, audio_tensor: np.ndarray) -> np.ndarray:
        return self.hide_forward(cover, self.prepare_forward(audio_tensor))

    # -- recorded forward / backward -------------------------------------

    def run_forward(self, cover: np.ndarray, audio_tensor: np.ndarray, record: bool = False):
        """Full pipeline pass; returns (container, revealed) planar tensors.

        With ``record=True`` the autodiff graph is kept so a single
        subsequent :meth:`backward` call can produce parameter gradients.
        Outputs are in model representation: the revealed tensor keeps the
        secret gain, matching the training loss.
        """
        c = _from_hwc(cover, self.dtype)
        s = _from_hwc(audio_tensor, self.dtype) * self.secret_gain
        with torch.enable_grad() if record else torch.no_grad():
            features = self._run("prepare", s)
            container = self._run("hide", torch.cat([c, features], dim=1))
            revealed = self._run("reveal", container)
        if record:
            self._tape = (container, revealed)
        return _to_hwc(container), _to_hwc(revealed)

    def backward(self, container_grad: np.ndarray, revealed_grad: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss for every kernel and bias.

        The caller supplies the loss gradients at the two pipeline outputs
        (container image and revealed tensor in model representation).
        Requires a recorded forward pass; each recording supports one
        backward call.
        """
        if self._tape is None:
            raise StegoError("backward called without a recorded forward pass")
        container, revealed = self._tape
        self._tape = None
        params = self.parameters()
        grads = torch.autograd.grad(
            outputs=[container, revealed],
            inputs=list(params.values()),
            grad_outputs=[
                _from_hwc(container_grad, self.dtype),
                _from_hwc(revealed_grad, self.dtype),
            ],
            allow_unused=True,
        )
        out: dict[str, np.ndarray] = {}
        for name, g in zip(params.keys(), grads):
            out[name] = (
                np.zeros(params[name].shape, dtype=np.float64)
                if g is None
                else g.cpu().numpy().astype(np.float64)
            )
        return out

    # -- parameter plumbing ----------------------------------------------

    def parameters(self) -> dict[str, nn.Parameter]:
        params: dict[str, nn.Parameter] = {}
        for role in NETWORK_ROLES:
            for name, p in self.nets[role].named_params().items():
                params[f"{role}.{name}"] = p
        return params

    def to_weights(self) -> ModelWeights:
        tensors: dict[str, np.ndarray] = {}
        for role in NETWORK_ROLES:
            for name, arr in self.nets[role].export_arrays().items():
                tensors[f"{role}.{name}"] = arr
        return ModelWeights(
            configs=dict(self.configs),
            tensors=tensors,
            method=self.method,
            secret_gain=self.secret_gain,
        )


def base_forward(x: np.ndarray, config: NetworkConfig, params: dict[str, np.ndarray]) -> np.ndarray:
    """Run one base-model instance functionally on a planar tensor."""
    x_t = _from_hwc(x, torch.float64)
    if x_t.shape[1] != config.input_channels:
        raise DataError(f"input has {x_t.shape[1]} channels, config expects {config.input_channels}")
    net = BaseNetwork(config).to(torch.float64)
    net.load_arrays(params)
    with torch.no_grad():
        return _to_hwc(net(x_t))


# -- serialization -------------------------------------------------------
#
# Layout (all integers little-endian):
#   magic "ASTG" | u16 version | u32 fingerprint length | fingerprint JSON
#   | u32 tensor count | per tensor: u16 name length, name UTF-8, u8 ndim,
#   ndim * u32 dims, float32 data | u32 CRC-32 of everything before it.


def save_weights(weights: ModelWeights, path) -> None:
    buf = io.BytesIO()
    buf.write(WEIGHTS_MAGIC)
    buf.write(struct.pack("<H", WEIGHTS_VERSION))
    fp = json.dumps(weights.fingerprint(), sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<I", len(fp)))
    buf.write(fp)
    buf.write(struct.pack("<I", len(weights.tensors)))
    for name in sorted(weights.tensors):
        arr = np.ascontiguousarray(weights.tensors[name], dtype="<f4")
        encoded = name.encode("utf-8")
        buf.write(struct.pack("<H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(arr.tobytes())
    payload = buf.getvalue()
    checksum = struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(payload + checksum)


def load_weights(path) -> ModelWeights:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataError(f"{path}: cannot read weight file ({exc})") from exc
    if len(blob) < len(WEIGHTS_MAGIC) + 2 + 4 + 4:
        raise WeightsFormatError(f"{path}: file too short to be a weight file")
    payload, stored = blob[:-4], blob[-4:]
    if struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF) != stored:
        raise WeightsFormatError(f"{path}: checksum mismatch (corrupt or truncated file)")
    buf = io.BytesIO(payload)

    def take(n: int, what: str) -> bytes:
        chunk = buf.read(n)
        if len(chunk) != n:
            raise WeightsFormatError(f"{path}: truncated while reading {what}")
        return chunk

    if take(4, "magic") != WEIGHTS_MAGIC:
        raise WeightsFormatError(f"{path}: bad magic bytes, not a weight file")
    (version,) = struct.unpack("<H", take(2, "version"))
    if version != WEIGHTS_VERSION:
        raise WeightsFormatError(f"{path}: unsupported weight format version {version}")
    (fp_len,) = struct.unpack("<I", take(4, "fingerprint length"))
    try:
        fingerprint = json.loads(take(fp_len, "fingerprint").decode("utf-8"))
        configs = {
            role: NetworkConfig(**{**cfg, "kernel_sizes": tuple(cfg["kernel_sizes"])})
            for role, cfg in fingerprint["configs"].items()
        }
        method = fingerprint["method"]
        secret_gain = float(fingerprint["secret_gain"])
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise WeightsFormatError(f"{path}: malformed fingerprint ({exc})") from exc
    (count,) = struct.unpack("<I", take(4, "tensor count"))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2, "tensor name length"))
        name = take(name_len, "tensor name").decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1, "tensor rank"))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim, "tensor shape"))
        size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        data = take(4 * size, f"tensor {name}")
        tensors[name] = np.frombuffer(data, dtype="<f4").reshape(shape).astype(np.float32)
    try:
        return ModelWeights(configs=configs, tensors=tensors, method=method, secret_gain=secret_gain)
    except ArchitectureMismatchError as exc:
        raise ArchitectureMismatchError(f"{path}: {exc}") from exc
