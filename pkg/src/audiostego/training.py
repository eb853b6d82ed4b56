"""Joint loss, dataset splitting, and the optimization loop.

The loss is a normalized weighted sum of the two mean squared errors:

    loss = (alpha * MSE(cover, container) + beta * MSE(secret, revealed))
           / (alpha + beta)

computed with the weights normalized first, so scaling alpha and beta by a
common power of two leaves the loss (and every gradient) bit-identical.
Optimization is mini-batch Adam over all three networks at once.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import images as images_mod
from .audio import AudioClip, fit_to_capacity, load_wav
from .errors import DataError, TrainingError
from .methods import IMAGE_SIDE, get_method
from .metrics import pearson
from .stegonet import ModelWeights, StegoModel, init_weights, save_weights


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DataError("loss weights alpha and beta must be positive")

    def normalized(self) -> tuple[float, float]:
        total = self.alpha + self.beta
        return self.alpha / total, self.beta / total


def joint_loss(cover, container, secret, revealed, weights: LossWeights = LossWeights()):
    """Weighted-MSE loss; accepts numpy arrays or torch tensors.

    Differentiable with respect to ``container`` and ``revealed`` when
    called on torch tensors with gradients enabled.
    """
    if tuple(cover.shape) != tuple(container.shape):
        raise DataError(f"cover/container shape mismatch: {tuple(cover.shape)} vs {tuple(container.shape)}")
    if tuple(secret.shape) != tuple(revealed.shape):
        raise DataError(f"secret/revealed shape mismatch: {tuple(secret.shape)} vs {tuple(revealed.shape)}")
    w_image, w_audio = weights.normalized()
    loss = w_image * ((container - cover) ** 2).mean() + w_audio * ((revealed - secret) ** 2).mean()
    if isinstance(loss, torch.Tensor):
        return loss
    return float(loss)


@dataclass
class TrainConfig:
    loss_weights: LossWeights = field(default_factory=LossWeights)
    method: str = "stft"
    batch_size: int = 4
    epochs: int = 1
    learning_rate: float = 1e-3
    seed: int = 0
    checkpoint_every: int = 0  # steps; 0 disables
    feature_maps: int = 32
    patience: int = 5  # epochs without validation improvement before stopping
    shuffle_pairing: bool = True  # re-pair images with clips every epoch
    deterministic: bool = False  # single-threaded torch for bit-stable runs
    lr_decay_every: int = 0  # steps between learning-rate halvings; 0 disables
    lr_decay_factor: float = 0.5

    def __post_init__(self):
        if self.batch_size < 1:
            raise DataError("batch_size must be at least 1")
        if self.epochs < 1:
            raise DataError("epochs must be at least 1")
        if self.learning_rate < 0:
            raise DataError("learning_rate must be non-negative")
        if self.lr_decay_every < 0 or not (0 < self.lr_decay_factor <= 1):
            raise DataError("invalid learning-rate decay settings")
        get_method(self.method)


@dataclass
class DataSplit:
    train: list[tuple[str, str]]
    validation: list[tuple[str, str]]
    test: list[tuple[str, str]]


def split_dataset(images: list, audios: list, seed: int = 0) -> DataSplit:
    """Pair shuffled images with shuffled clips and split 80/10/10."""
    if not images or not audios:
        raise DataError("split_dataset needs non-empty image and audio lists")
    rng = np.random.default_rng(seed)
    image_order = [images[i] for i in rng.permutation(len(images))]
    audio_order = [audios[i] for i in rng.permutation(len(audios))]
    n = min(len(image_order), len(audio_order))
    pairs = [(str(image_order[i]), str(audio_order[i])) for i in range(n)]
    n_train = round(0.8 * n)
    n_val = round(0.1 * n)
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    return DataSplit(
        train=pairs[:n_train],
        validation=pairs[n_train : n_train + n_val],
        test=pairs[n_train + n_val :],
    )


def load_pair(image_path, audio_path, method_name: str) -> tuple[np.ndarray, AudioClip]:
    """Read one (cover, clip) pair, resized/fitted for the method."""
    method = get_method(method_name)
    pixels = images_mod.load_image(image_path)
    if pixels.shape[:2] != (IMAGE_SIDE, IMAGE_SIDE):
        raise DataError(
            f"{image_path}: expected a {IMAGE_SIDE}x{IMAGE_SIDE} image (run ingest first), "
            f"got {pixels.shape[0]}x{pixels.shape[1]}"
        )
    cover = images_mod.to_float(pixels)
    clip = fit_to_capacity(load_wav(audio_path), method.capacity_samples)
    return cover, clip


@dataclass
class TrainResult:
    weights: ModelWeights
    log: list[str]
    best_val_loss: float
    steps: int


@dataclass
class OverfitResult:
    weights: ModelWeights
    steps: int
    losses: list[float]  # per-step training loss
    history: list[dict]  # periodic train-set metrics snapshots
    image_mse: float
    mean_audio_r: float
    elapsed_s: float


class _Trainer:
    """Shared machinery for the epoch loop and the fixed-pair overfit loop."""

    def __init__(self, config: TrainConfig):
        self.config = config
        self.method = get_method(config.method)
        if config.deterministic:
            torch.set_num_threads(1)
        self.model = StegoModel(
            init_weights(config.method, feature_maps=config.feature_maps, seed=config.seed)
        )
        self.params = list(self.model.parameters().values())
        for p in self.params:
            p.requires_grad_(True)
        self.opt = torch.optim.Adam(self.params, lr=config.learning_rate)
        self.w_image, self.w_audio = config.loss_weights.normalized()

    def tensorize(self, covers: list[np.ndarray], clips: list[AudioClip]):
        cov = np.stack([c.transpose(2, 0, 1) for c in covers]).astype(np.float32)
        fitted = [fit_to_capacity(c, self.method.capacity_samples) for c in clips]
        sec = np.stack(
            [self.method.audio_to_tensor(c).transpose(2, 0, 1) for c in fitted]
        ).astype(np.float32)
        sec *= self.model.secret_gain
        return torch.from_numpy(cov), torch.from_numpy(sec)

    def maybe_decay(self, step: int) -> None:
        config = self.config
        if config.lr_decay_every and step % config.lr_decay_every == 0:
            for group in self.opt.param_groups:
                group["lr"] *= config.lr_decay_factor

    def step(self, cover_batch: torch.Tensor, secret_batch: torch.Tensor) -> float:
        self.opt.zero_grad()
        features = self.model.nets["prepare"](secret_batch)
        container = self.model.nets["hide"](torch.cat([cover_batch, features], dim=1))
        revealed = self.model.nets["reveal"](container)
        loss = (
            self.w_image * ((container - cover_batch) ** 2).mean()
            + self.w_audio * ((revealed - secret_batch) ** 2).mean()
        )
        loss.backward()
        self.opt.step()
        return float(loss.detach())

    def batch_loss(self, cover: torch.Tensor, secret: torch.Tensor, batch: int) -> float:
        """Joint loss over a whole set, streamed in batches (no grad)."""
        image_sq = 0.0
        audio_sq = 0.0
        n_image = 0
        n_audio = 0
        with torch.no_grad():
            for lo in range(0, cover.shape[0], batch):
                c = cover[lo : lo + batch]
                s = secret[lo : lo + batch]
                features = self.model.nets["prepare"](s)
                container = self.model.nets["hide"](torch.cat([c, features], dim=1))
                revealed = self.model.nets["reveal"](container)
                image_sq += float(((container - c) ** 2).sum())
                audio_sq += float(((revealed - s) ** 2).sum())
                n_image += c.numel()
                n_audio += s.numel()
        return self.w_image * image_sq / n_image + self.w_audio * audio_sq / n_audio

    def train_set_metrics(self, cover: torch.Tensor, secret: torch.Tensor, clips: list[AudioClip], batch: int) -> dict:
        """Float-path image MSE and audio correlation over a fixed pair set."""
        image_mses = []
        audio_rs = []
        with torch.no_grad():
            for lo in range(0, cover.shape[0], batch):
                c = cover[lo : lo + batch]
                s = secret[lo : lo + batch]
                features = self.model.nets["prepare"](s)
                container = self.model.nets["hide"](torch.cat([c, features], dim=1))
                revealed = self.model.nets["reveal"](container)
                for j in range(c.shape[0]):
                    image_mses.append(float(((container[j] - c[j]) ** 2).mean()))
                    tensor = (
                        revealed[j].cpu().numpy().astype(np.float64).transpose(1, 2, 0)
                        / self.model.secret_gain
                    )
                    decoded = self.method.tensor_to_audio(tensor)
                    audio_rs.append(pearson(clips[lo + j].samples, decoded.samples))
        return {
            "image_mse": float(np.mean(image_mses)),
            "mean_audio_r": float(np.mean(audio_rs)),
        }


def train(split: DataSplit, config: TrainConfig, out_dir=None) -> TrainResult:
    """Mini-batch Adam over the training pairs with per-epoch validation.

    Returns the weights from the epoch with the best validation loss.
    Training stops early after ``config.patience`` epochs without
    improvement.  The log is a list of ``step,epoch,train_loss,val_loss``
    lines (validation filled on epoch boundaries).
    """
    if not split.train:
        raise TrainingError("training split is empty")
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    trainer = _Trainer(config)
    covers, clips = [], []
    for image_path, audio_path in split.train:
        cover, clip = load_pair(image_path, audio_path, config.method)
        covers.append(cover)
        clips.append(clip)
    cover_t, secret_t = trainer.tensorize(covers, clips)

    val_tensors = None
    if split.validation:
        vc, vs = [], []
        for image_path, audio_path in split.validation:
            cover, clip = load_pair(image_path, audio_path, config.method)
            vc.append(cover)
            vs.append(clip)
        val_tensors = trainer.tensorize(vc, vs)

    rng = np.random.default_rng(config.seed)
    log: list[str] = ["step,epoch,train_loss,val_loss"]
    best_val = float("inf")
    best_state = None
    stale_epochs = 0
    step = 0
    n = cover_t.shape[0]
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        pairing = rng.permutation(n) if config.shuffle_pairing else np.arange(n)
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            step += 1
            loss = trainer.step(cover_t[idx], secret_t[pairing[idx]])
            trainer.maybe_decay(step)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at step {step}")
            log.append(f"{step},{epoch},{loss:.8g},")
            if config.checkpoint_every and step % config.checkpoint_every == 0 and out_dir is not None:
                save_weights(trainer.model.to_weights(), out_dir / f"checkpoint_{step:07d}.weights")
        if val_tensors is not None:
            val_loss = trainer.batch_loss(*val_tensors, config.batch_size)
        else:
            val_loss = trainer.batch_loss(cover_t, secret_t, config.batch_size)
        log.append(f"{step},{epoch},,{val_loss:.8g}")
        if val_loss < best_val:
            best_val = val_loss
            best_state = copy.deepcopy([p.detach().clone() for p in trainer.params])
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= config.patience:
                break
    if best_state is not None:
        with torch.no_grad():
            for p, saved in zip(trainer.params, best_state):
                p.copy_(saved)
    weights = trainer.model.to_weights()
    if out_dir is not None:
        (out_dir / "train_log.csv").write_text("\n".join(log) + "\n")
    return TrainResult(weights=weights, log=log, best_val_loss=best_val, steps=step)


def overfit_pairs(
    covers: list[np.ndarray],
    clips: list[AudioClip],
    config: TrainConfig,
    max_steps: int = 5000,
    eval_every: int = 250,
    target_image_mse: float | None = None,
    target_audio_r: float | None = None,
    progress=None,
) -> OverfitResult:
    """Memorize a fixed pair set; the desk-scale stand-in for a full run.

    Pairing is fixed (pair i always hides clip i in cover i).  Every
    ``eval_every`` steps the float-path image MSE and decoded-audio
    correlation are measured over all pairs; when both targets are given
    and met, training stops there.
    """
    if len(covers) != len(clips) or not covers:
        raise TrainingError("overfit_pairs needs matching non-empty cover and clip lists")
    trainer = _Trainer(config)
    cover_t, secret_t = trainer.tensorize(covers, clips)
    clips_fitted = [fit_to_capacity(c, trainer.method.capacity_samples) for c in clips]

    rng = np.random.default_rng(config.seed)
    n = cover_t.shape[0]
    order = rng.permutation(n)
    cursor = 0
    losses: list[float] = []
    history: list[dict] = []
    started = time.time()
    step = 0
    while step < max_steps:
        if cursor + config.batch_size > n:
            order = rng.permutation(n)
            cursor = 0
        idx = order[cursor : cursor + config.batch_size]
        cursor += config.batch_size
        step += 1
        loss = trainer.step(cover_t[idx], secret_t[idx])
        trainer.maybe_decay(step)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {step}")
        losses.append(loss)
        if step % eval_every == 0 or step == max_steps:
            snapshot = trainer.train_set_metrics(cover_t, secret_t, clips_fitted, config.batch_size)
            snapshot["step"] = step
            snapshot["loss"] = loss
            history.append(snapshot)
            if progress is not None:
                progress(snapshot)
            if (
                target_image_mse is not None
                and target_audio_r is not None
                and snapshot["image_mse"] <= target_image_mse
                and snapshot["mean_audio_r"] >= target_audio_r
            ):
                break
    final = history[-1] if history else trainer.train_set_metrics(
        cover_t, secret_t, clips_fitted, config.batch_size
    )
    return OverfitResult(
        weights=trainer.model.to_weights(),
        steps=step,
        losses=losses,
        history=history,
        image_mse=final["image_mse"],
        mean_audio_r=final["mean_audio_r"],
        elapsed_s=time.time() - started,
    )
