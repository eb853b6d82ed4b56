import json

import numpy as np
import pytest

from audiostego import AudioClip, load_wav, save_wav
from audiostego.cli import main, read_config_file
from audiostego.images import load_image, save_image, to_bytes
from audiostego.synth import smooth_image, speech_like


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    rng = np.random.default_rng(77)
    images = root / "images"
    audio = root / "audio"
    images.mkdir()
    audio.mkdir()
    for i in range(8):
        save_image(images / f"img{i}.png", to_bytes(smooth_image(rng)))
        save_wav(audio / f"clip{i}.wav", speech_like(rng, n_samples=24000))
    save_wav(audio / "long.wav", speech_like(rng, n_samples=80000))  # 5 s, over stft capacity
    return root


@pytest.fixture(scope="module")
def trained(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    weights = out / "model.weights"
    code = main(
        [
            "train",
            str(corpus / "images"),
            str(corpus / "audio"),
            "--out",
            str(weights),
            "--feature-maps",
            "1",
            "--epochs",
            "1",
            "--batch-size",
            "4",
            "--seed",
            "3",
        ]
    )
    assert code == 0
    return weights


def test_usage_error_exit_code():
    assert main(["no-such-command"]) == 1
    assert main(["encode", "a.png"]) == 1  # missing required flags


def test_data_error_exit_code(tmp_path):
    assert main(["decode", "missing.png", "--weights", "nowhere.weights", "--out", str(tmp_path / "o.wav")]) == 2


def test_ingest(corpus, tmp_path):
    out = tmp_path / "ingested"
    big = corpus / "images" / "big.png"
    rng = np.random.default_rng(0)
    save_image(big, rng.integers(0, 256, size=(384, 512, 3), dtype=np.uint8))
    (corpus / "audio" / "broken.wav").write_bytes(b"riffraff")
    try:
        code = main(["ingest", str(corpus / "images"), str(corpus / "audio"), str(out)])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        kinds = {e["kind"] for e in manifest["entries"]}
        assert kinds == {"image", "audio"}
        for entry in manifest["entries"]:
            if entry["kind"] == "image":
                assert load_image(entry["processed"]).shape == (255, 255, 3)
                assert entry["dimensions"] == [255, 255, 3]
        long_entries = [e for e in manifest["entries"] if "long" in e["original"]]
        assert long_entries and "truncated at encode time" in long_entries[0]["note"]
        assert any("broken.wav" in e["path"] for e in manifest["errors"])
    finally:
        big.unlink()
        (corpus / "audio" / "broken.wav").unlink()


def test_encode_decode_roundtrip(corpus, trained, tmp_path, capsys):
    container = tmp_path / "container.png"
    code = main(
        [
            "encode",
            str(corpus / "images" / "img0.png"),
            str(corpus / "audio" / "clip0.wav"),
            "--weights",
            str(trained),
            "--out",
            str(container),
        ]
    )
    assert code == 0
    pixels = load_image(container)
    assert pixels.shape == (255, 255, 3)

    revealed = tmp_path / "revealed.wav"
    code = main(["decode", str(container), "--weights", str(trained), "--out", str(revealed)])
    assert code == 0
    clip = load_wav(revealed)
    assert len(clip) == 64000  # stft capacity


def test_encode_rejects_lossy_output(corpus, trained, tmp_path):
    code = main(
        [
            "encode",
            str(corpus / "images" / "img0.png"),
            str(corpus / "audio" / "clip0.wav"),
            "--weights",
            str(trained),
            "--out",
            str(tmp_path / "container.jpg"),
        ]
    )
    assert code == 1


def test_strict_capacity_exit_code(corpus, trained, tmp_path, capsys):
    args = [
        "encode",
        str(corpus / "images" / "img0.png"),
        str(corpus / "audio" / "long.wav"),
        "--weights",
        str(trained),
        "--out",
        str(tmp_path / "c.png"),
    ]
    assert main(args + ["--strict"]) == 3
    assert main(args) == 0  # non-strict truncates with a warning
    assert "truncating" in capsys.readouterr().err


def test_encode_decode_reproducible(corpus, trained, tmp_path):
    outputs = []
    for run in range(2):
        container = tmp_path / f"c{run}.png"
        revealed = tmp_path / f"r{run}.wav"
        assert (
            main(
                [
                    "encode",
                    str(corpus / "images" / "img2.png"),
                    str(corpus / "audio" / "clip2.wav"),
                    "--weights",
                    str(trained),
                    "--out",
                    str(container),
                ]
            )
            == 0
        )
        assert main(["decode", str(container), "--weights", str(trained), "--out", str(revealed)]) == 0
        outputs.append((container.read_bytes(), revealed.read_bytes()))
    assert outputs[0] == outputs[1]


def test_method_mismatch_is_data_error(corpus, trained, tmp_path):
    code = main(
        [
            "decode",
            str(corpus / "images" / "img0.png"),
            "--weights",
            str(trained),
            "--method",
            "raw",
            "--out",
            str(tmp_path / "o.wav"),
        ]
    )
    assert code == 2


def test_eval_writes_reports_and_figures(corpus, trained, tmp_path):
    out = tmp_path / "report"
    code = main(
        [
            "eval",
            str(corpus / "images"),
            str(corpus / "audio"),
            "--weights",
            str(trained),
            "--seed",
            "3",
            "--out",
            str(out),
            "--figures",
            "1",
        ]
    )
    assert code == 0
    assert (out / "report.txt").exists()
    kv = dict(
        line.split(" = ", 1)
        for line in (out / "report.kv").read_text().splitlines()
    )
    assert kv["method"] == "stft"
    assert float(kv["float.sse"]) >= 0.0
    assert int(kv["float.pair_count"]) >= 1
    assert "quant.sse" in kv
    assert (out / "specdiff_000.png").exists()


def test_eval_silent_secret_reports_rms(corpus, trained, tmp_path):
    images = tmp_path / "imgs"
    audio = tmp_path / "wavs"
    images.mkdir()
    audio.mkdir()
    rng = np.random.default_rng(5)
    for i in range(3):
        save_image(images / f"i{i}.png", to_bytes(smooth_image(rng)))
        save_wav(audio / f"a{i}.wav", AudioClip(np.zeros(64000, dtype=np.int16)))
    out = tmp_path / "silent_report"
    code = main(
        [
            "eval",
            str(images),
            str(audio),
            "--weights",
            str(trained),
            "--out",
            str(out),
            "--figures",
            "0",
        ]
    )
    assert code == 0
    kv = dict(line.split(" = ", 1) for line in (out / "report.kv").read_text().splitlines())
    assert int(kv["float.undefined_correlations"]) >= 1
    assert kv["float.pair0.audio_r"] == "undefined"
    assert "float.pair0.audio_rms" in kv


def test_compare_lsb(corpus, tmp_path, capsys):
    out = tmp_path / "lsb.kv"
    code = main(
        [
            "compare-lsb",
            str(corpus / "images"),
            str(corpus / "audio"),
            "--k",
            "1,4",
            "--limit",
            "2",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    printed = capsys.readouterr().out
    assert "lsb-k1" in printed and "dnn-raw" in printed
    kv = dict(line.split(" = ", 1) for line in out.read_text().splitlines())
    assert float(kv["lsb-k1.audio_r_mean"]) == 1.0
    assert float(kv["lsb-k4.capacity_seconds"]) == pytest.approx(48766 / 16000)
    assert float(kv["dnn-raw.capacity_seconds"]) == pytest.approx(195075 / 16000)


def test_raw_method_full_capacity_roundtrip(corpus, tmp_path):
    rng = np.random.default_rng(9)
    long_wav = tmp_path / "twelve.wav"
    save_wav(long_wav, speech_like(rng, n_samples=195_075))  # 12.19 s, exactly raw capacity
    weights = tmp_path / "raw.weights"
    assert (
        main(
            [
                "train",
                str(corpus / "images"),
                str(corpus / "audio"),
                "--method",
                "raw",
                "--feature-maps",
                "1",
                "--epochs",
                "1",
                "--batch-size",
                "4",
                "--seed",
                "2",
                "--out",
                str(weights),
            ]
        )
        == 0
    )
    container = tmp_path / "c.png"
    code = main(
        [
            "encode",
            str(corpus / "images" / "img1.png"),
            str(long_wav),
            "--weights",
            str(weights),
            "--strict",
            "--out",
            str(container),
        ]
    )
    assert code == 0  # 12.19 s fits the raw method even under --strict
    revealed = tmp_path / "r.wav"
    assert main(["decode", str(container), "--weights", str(weights), "--out", str(revealed)]) == 0
    assert len(load_wav(revealed)) == 195_075

    out = tmp_path / "rawreport"
    code = main(
        [
            "eval",
            str(corpus / "images"),
            str(corpus / "audio"),
            "--weights",
            str(weights),
            "--seed",
            "2",
            "--out",
            str(out),
            "--figures",
            "1",
        ]
    )
    assert code == 0
    assert (out / "specdiff_000.png").exists()


def test_config_file_defaults(corpus, tmp_path):
    config = tmp_path / "train.cfg"
    config.write_text(
        "# defaults for desk runs\n"
        "method = stft\n"
        "feature_maps = 1\n"
        "epochs = 1\n"
        "batch_size = 4\n"
        "learning_rate = 0.001\n"
    )
    weights = tmp_path / "m.weights"
    code = main(
        [
            "train",
            str(corpus / "images"),
            str(corpus / "audio"),
            "--config",
            str(config),
            "--out",
            str(weights),
            "--seed",
            "1",
        ]
    )
    assert code == 0
    assert weights.exists()


def test_config_parser_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("this line has no equals sign\n")
    with pytest.raises(Exception):
        read_config_file(bad)
