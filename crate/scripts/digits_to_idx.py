#!/usr/bin/env python3
"""Convert the digit JSON files shipped in the `mnist` npm package into IDX files.

Usage: digits_to_idx.py <path-to-package/src/digits> <out-dir> [train_count] [eval_count]

Pixels are stored in the JSON as floats rounded to three decimals; they are
mapped back to bytes with round(v * 255). Samples are interleaved across
classes with a fixed seed so that any prefix is roughly class balanced.
"""
import json
import random
import struct
import sys
from pathlib import Path


def write_idx(prefix, images, labels):
    with open(f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))
    with open(f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    n_train = int(sys.argv[3]) if len(sys.argv) > 3 else 2000
    n_eval = int(sys.argv[4]) if len(sys.argv) > 4 else 1000
    per_class = []
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        imgs = [
            [min(255, max(0, round(v * 255))) for v in data[i : i + 784]]
            for i in range(0, len(data) - 783, 784)
        ]
        per_class.append([(img, digit) for img in imgs])
    rng = random.Random(20130615)
    for bucket in per_class:
        rng.shuffle(bucket)
    pooled = []
    for k in range(max(len(b) for b in per_class)):
        round_ = [b[k] for b in per_class if k < len(b)]
        rng.shuffle(round_)
        pooled.extend(round_)
    train, evals = pooled[:n_train], pooled[n_train : n_train + n_eval]
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "digits-train", [i for i, _ in train], [l for _, l in train])
    write_idx(out / "digits-eval", [i for i, _ in evals], [l for _, l in evals])


if __name__ == "__main__":
    main()
