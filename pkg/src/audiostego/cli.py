"""Command-line surface: ingest, encode, decode, train, eval, compare-lsb.

Exit codes: 0 success, 1 usage error, 2 data error, 3 capacity error.
A plain-text key=value config file can supply defaults for the training
and method flags; explicit flags always win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import images as images_mod
from .audio import DEFAULT_SAMPLE_RATE, AudioClip, fit_to_capacity, load_wav, save_wav
from .errors import CapacityError, DataError, StegoError, UsageError
from .lsb import lsb_capacity_samples, lsb_embed, lsb_extract
from .methods import IMAGE_SIDE, get_method
from .metrics import (
    MetricsReport,
    mse_per_pixel_per_channel,
    pearson,
    rms_error,
    spectrogram_diff_image,
    write_key_values,
)
from .spectral import STFT_CAPACITY_SAMPLES
from .stegonet import StegoModel, load_weights, save_weights
from .training import DataSplit, LossWeights, TrainConfig, load_pair, split_dataset, train

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff", ".webp"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_config_file(path) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _resolved(args, key: str, cast, fallback):
    """CLI flag if given, else config-file value, else fallback."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    config = getattr(args, "_config_values", {})
    if key in config:
        try:
            return cast(config[key])
        except ValueError as exc:
            raise DataError(f"config value {key} = {config[key]!r} is not a valid {cast.__name__}") from exc
    return fallback


def _list_files(directory, suffixes) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"{directory}: not a directory")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in suffixes)


def _load_model(args) -> StegoModel:
    weights = load_weights(args.weights)
    method = _resolved(args, "method", str, None)
    if method is not None and method != weights.method:
        raise DataError(
            f"weights at {args.weights} were trained for method '{weights.method}', "
            f"but --method {method} was requested"
        )
    return StegoModel(weights)


# -- commands --------------------------------------------------------------


def cmd_ingest(args) -> int:
    method = get_method(_resolved(args, "method", str, "stft"))
    out_dir = Path(args.out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)
    entries = []
    errors = []
    for i, path in enumerate(_list_files(args.images_dir, IMAGE_SUFFIXES)):
        processed = out_dir / "images" / f"{i:05d}_{path.stem}.png"
        try:
            pixels = images_mod.resize_rgb(images_mod.load_image(path), IMAGE_SIDE)
            images_mod.save_image(processed, pixels)
        except StegoError as exc:
            errors.append({"path": str(path), "reason": str(exc)})
            continue
        entries.append(
            {
                "original": str(path),
                "processed": str(processed),
                "kind": "image",
                "dimensions": [IMAGE_SIDE, IMAGE_SIDE, 3],
            }
        )
    for i, path in enumerate(_list_files(args.audio_dir, {".wav"})):
        processed = out_dir / "audio" / f"{i:05d}_{path.stem}.wav"
        try:
            clip = load_wav(path, expected_rate=args.rate)
            save_wav(processed, clip)
        except StegoError as exc:
            errors.append({"path": str(path), "reason": str(exc)})
            continue
        entry = {
            "original": str(path),
            "processed": str(processed),
            "kind": "audio",
            "duration_s": round(clip.duration, 6),
        }
        if len(clip) > method.capacity_samples:
            entry["note"] = (
                f"exceeds {method.capacity_seconds:g} s capacity of method '{method.name}'; "
                "will be truncated at encode time"
            )
        entries.append(entry)
    manifest = {"sample_rate": args.rate, "method": method.name, "entries": entries, "errors": errors}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"ingested {len(entries)} files into {out_dir} ({len(errors)} skipped)")
    return 0


def _fit_secret(clip: AudioClip, capacity: int, strict: bool, label: str) -> AudioClip:
    if len(clip) > capacity:
        message = (
            f"{label}: clip of {len(clip)} samples exceeds method capacity of "
            f"{capacity} samples ({capacity / DEFAULT_SAMPLE_RATE:.2f} s)"
        )
        if strict:
            raise CapacityError(message)
        print(f"warning: {message}; truncating", file=sys.stderr)
    return fit_to_capacity(clip, capacity)


def _load_cover(path) -> np.ndarray:
    pixels = images_mod.load_image(path)
    if pixels.shape[:2] != (IMAGE_SIDE, IMAGE_SIDE):
        raise DataError(
            f"{path}: cover must be {IMAGE_SIDE}x{IMAGE_SIDE} (run ingest first), "
            f"got {pixels.shape[0]}x{pixels.shape[1]}"
        )
    return pixels


def cmd_encode(args) -> int:
    model = _load_model(args)
    method = get_method(model.method)
    cover = images_mod.to_float(_load_cover(args.cover))
    clip = _fit_secret(load_wav(args.secret), method.capacity_samples, args.strict, args.secret)
    container = model.encode_tensor(cover, method.audio_to_tensor(clip))
    out = Path(args.out)
    images_mod.save_image(out, images_mod.to_bytes(container))
    print(f"wrote container {out} (method {method.name}, {clip.duration:.2f} s of audio)")
    return 0


def cmd_decode(args) -> int:
    model = _load_model(args)
    method = get_method(model.method)
    container = images_mod.to_float(_load_cover(args.container))
    tensor = model.reveal_forward(container)
    clip = method.tensor_to_audio(tensor)
    save_wav(args.out, clip)
    print(f"wrote {args.out} ({clip.duration:.2f} s, method {method.name})")
    return 0


def _build_split(args) -> DataSplit:
    images = _list_files(args.images_dir, IMAGE_SUFFIXES)
    audios = _list_files(args.audio_dir, {".wav"})
    if not images:
        raise DataError(f"{args.images_dir}: no images found")
    if not audios:
        raise DataError(f"{args.audio_dir}: no WAV files found")
    return split_dataset(images, audios, seed=_resolved(args, "seed", int, 0))


def cmd_train(args) -> int:
    split = _build_split(args)
    config = TrainConfig(
        loss_weights=LossWeights(
            alpha=_resolved(args, "alpha", float, 1.0),
            beta=_resolved(args, "beta", float, 1.0),
        ),
        method=_resolved(args, "method", str, "stft"),
        batch_size=_resolved(args, "batch_size", int, 4),
        epochs=_resolved(args, "epochs", int, 1),
        learning_rate=_resolved(args, "learning_rate", float, 1e-3),
        seed=_resolved(args, "seed", int, 0),
        checkpoint_every=_resolved(args, "checkpoint_every", int, 0),
        feature_maps=_resolved(args, "feature_maps", int, 32),
        patience=_resolved(args, "patience", int, 5),
        shuffle_pairing=not args.fixed_pairing,
        deterministic=args.deterministic,
    )
    result = train(split, config, out_dir=args.workdir)
    save_weights(result.weights, args.out)
    print(
        f"trained {result.steps} steps on {len(split.train)} pairs "
        f"(val {len(split.validation)}, test {len(split.test)}); "
        f"best validation loss {result.best_val_loss:.6g}; weights -> {args.out}"
    )
    return 0


def cmd_eval(args) -> int:
    model = _load_model(args)
    method = get_method(model.method)
    split = _build_split(args)
    pairs = split.test
    if not pairs:
        raise DataError("test split is empty")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    float_report = MetricsReport()
    quant_report = MetricsReport()
    baseline_sse = 0.0
    failures = []
    for index, (image_path, audio_path) in enumerate(pairs):
        try:
            cover, clip = load_pair(image_path, audio_path, method.name)
            secret_t = method.audio_to_tensor(clip)
            container = model.encode_tensor(cover, secret_t)
            quantized = images_mod.quantize(container)
            baseline_sse += mse_per_pixel_per_channel(cover, np.full_like(cover, 0.5))
            for report, cont in ((float_report, container), (quant_report, quantized)):
                revealed = method.tensor_to_audio(model.reveal_forward(cont))
                image_mse = mse_per_pixel_per_channel(cover, cont)
                try:
                    audio_r = pearson(clip.samples, revealed.samples)
                    audio_rms = None
                except DataError:
                    audio_r = None  # constant audio: correlation undefined
                    audio_rms = rms_error(clip.as_float(), revealed.as_float())
                report.add(image_mse, audio_r, audio_rms)
            if index < args.figures:
                revealed = method.tensor_to_audio(model.reveal_forward(quantized))
                # figures visualize the first 4 s regardless of method capacity
                window = STFT_CAPACITY_SAMPLES
                figure = spectrogram_diff_image(
                    fit_to_capacity(clip, window), fit_to_capacity(revealed, window)
                )
                images_mod.save_image(
                    out_dir / f"specdiff_{index:03d}.png", images_mod.to_bytes(figure)
                )
        except StegoError as exc:
            failures.append(f"pair {index} ({image_path}, {audio_path}): {exc}")
    if not float_report.per_pair:
        raise DataError("every evaluation pair failed; nothing to report")

    header = [
        f"method: {method.name}",
        f"weights: {args.weights}",
        f"pairs: {float_report.pair_count} evaluated, {len(failures)} failed",
        f"baseline constant-0.5 container SSE over this set: {baseline_sse:.6g}",
    ]
    text = "\n".join(
        header
        + ["", float_report.format_text("float container path"),
           "", quant_report.format_text("8-bit container path")]
        + (["", "failures:"] + failures if failures else [])
    )
    (out_dir / "report.txt").write_text(text + "\n")
    kv = {
        "method": method.name,
        "pair_count": str(float_report.pair_count),
        "failures": str(len(failures)),
        "baseline_constant_sse": repr(baseline_sse),
    }
    kv.update(float_report.key_values("float."))
    kv.update(quant_report.key_values("quant."))
    write_key_values(out_dir / "report.kv", kv)
    print(text)
    return 0


def cmd_compare_lsb(args) -> int:
    ks = [int(part) for part in args.k.split(",") if part]
    for k in ks:
        if not 1 <= k <= 8:
            raise UsageError(f"--k entries must be in 1..8, got {k}")
    images = _list_files(args.images_dir, IMAGE_SUFFIXES)
    audios = _list_files(args.audio_dir, {".wav"})
    if not images or not audios:
        raise DataError("compare-lsb needs at least one image and one clip")
    n = min(len(images), len(audios), args.limit)

    dnn_rows = []
    for name in ("raw", "stft"):
        method = get_method(name)
        dnn_rows.append(
            {
                "scheme": f"dnn-{name}",
                "capacity_samples": method.capacity_samples,
                "capacity_seconds": method.capacity_seconds,
            }
        )
    if args.dnn_report:
        extra = {}
        for line in Path(args.dnn_report).read_text().splitlines():
            if "=" in line:
                key, value = line.split("=", 1)
                extra[key.strip()] = value.strip()
        for row in dnn_rows:
            if extra.get("method") == row["scheme"].removeprefix("dnn-"):
                row["image_mse_mean"] = float(extra["float.sse"]) / float(extra["float.pair_count"])
                row["audio_r_mean"] = float(extra["float.mean_correlation"])

    rows = []
    for k in ks:
        image_mses = []
        audio_rs = []
        capacity = None
        for i in range(n):
            cover = images_mod.load_image(images[i])
            capacity = lsb_capacity_samples(cover.shape[0], cover.shape[1], k)
            clip = load_wav(audios[i])
            clip = fit_to_capacity(clip, min(len(clip), capacity) or 1)
            container = lsb_embed(cover, clip, k)
            recovered = lsb_extract(container, k)
            if not np.array_equal(recovered.samples, clip.samples):
                raise StegoError(f"LSB round trip failed at k={k}, pair {i}")
            image_mses.append(
                mse_per_pixel_per_channel(images_mod.to_float(cover), images_mod.to_float(container))
            )
            try:
                audio_rs.append(pearson(clip.samples, recovered.samples))
            except DataError:
                audio_rs.append(1.0)  # constant clip recovered bit-exactly
        rows.append(
            {
                "scheme": f"lsb-k{k}",
                "capacity_samples": capacity,
                "capacity_seconds": capacity / DEFAULT_SAMPLE_RATE,
                "image_mse_mean": float(np.mean(image_mses)),
                "audio_r_mean": float(np.mean(audio_rs)),
            }
        )

    all_rows = rows + dnn_rows
    print(f"{'scheme':<10} {'capacity_s':>10} {'image_mse':>12} {'audio_r':>9}")
    for row in all_rows:
        mse = row.get("image_mse_mean")
        r = row.get("audio_r_mean")
        print(
            f"{row['scheme']:<10} {row['capacity_seconds']:>10.2f} "
            f"{mse if mse is not None else '-':>12} {r if r is not None else '-':>9}"
        )
    if args.out:
        kv = {}
        for row in all_rows:
            for key, value in row.items():
                if key != "scheme":
                    kv[f"{row['scheme']}.{key}"] = repr(value)
        write_key_values(args.out, kv)
    return 0


# -- argument wiring --------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="audiostego", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--method", choices=["raw", "stft"], default=None)

    p = sub.add_parser("ingest", help="normalize a folder of images and WAVs for the toolkit")
    p.add_argument("images_dir")
    p.add_argument("audio_dir")
    p.add_argument("out_dir")
    p.add_argument("--rate", type=int, default=DEFAULT_SAMPLE_RATE)
    add_config(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("encode", help="hide a clip inside a cover image")
    p.add_argument("cover")
    p.add_argument("secret")
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true", help="refuse clips over capacity instead of truncating")
    add_config(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="recover the hidden clip from a container image")
    p.add_argument("container")
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    add_config(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("train", help="train the three networks on an ingested dataset")
    p.add_argument("images_dir")
    p.add_argument("audio_dir")
    p.add_argument("--out", default="model.weights")
    p.add_argument("--workdir", default=None, help="directory for checkpoints and the training log")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--feature-maps", dest="feature_maps", type=int, default=None)
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--fixed-pairing", action="store_true")
    p.add_argument("--deterministic", action="store_true")
    add_config(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="encode/decode the test split and report fidelity metrics")
    p.add_argument("images_dir")
    p.add_argument("audio_dir")
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--figures", type=int, default=4, help="spectrogram-difference figures to write")
    add_config(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare-lsb", help="run the k-LSB baseline side by side with the DNN capacities")
    p.add_argument("images_dir")
    p.add_argument("audio_dir")
    p.add_argument("--k", default="1,2,4")
    p.add_argument("--limit", type=int, default=20, help="max pairs to evaluate")
    p.add_argument("--out", default=None, help="optional key=value report path")
    p.add_argument("--dnn-report", dest="dnn_report", default=None, help="eval report.kv to merge in")
    add_config(p)
    p.set_defaults(func=cmd_compare_lsb)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args._config_values = read_config_file(args.config) if getattr(args, "config", None) else {}
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except StegoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
