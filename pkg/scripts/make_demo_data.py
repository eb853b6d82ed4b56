#!/usr/bin/env python3
"""Synthesize a desk-scale demo corpus: smooth cover images and speech-like WAVs.

Real photo/speech corpora are not bundled; this produces stand-ins with the
right shapes and gross statistics so the CLI pipeline can be exercised end
to end:

    python scripts/make_demo_data.py demo_data --pairs 60
    audiostego ingest demo_data/images demo_data/audio demo_data/ingested
"""

import argparse
from pathlib import Path

import numpy as np

from audiostego.audio import save_wav
from audiostego.images import save_image, to_bytes
from audiostego.synth import smooth_image, speech_like


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--pairs", type=int, default=60)
    parser.add_argument("--seconds", type=float, default=4.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    out = Path(args.out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "audio").mkdir(parents=True, exist_ok=True)
    n_samples = int(args.seconds * 16000)
    for i in range(args.pairs):
        save_image(out / "images" / f"demo_{i:04d}.png", to_bytes(smooth_image(rng)))
        save_wav(out / "audio" / f"demo_{i:04d}.wav", speech_like(rng, n_samples=n_samples))
    print(f"wrote {args.pairs} images and {args.pairs} clips under {out}")


if __name__ == "__main__":
    main()
