#!/usr/bin/env python3
"""Build a small MNIST-format dataset from the `mnist` npm package.

The package ships 10,000 handwritten digits (1,000 per class up to rounding)
as JSON arrays of 784 floats in [0, 1]. They are rescaled to bytes, shuffled
with a fixed seed, split 80/20 per class and written as gzipped IDX files.

    python3 scripts/make_desk_mnist.py [--package DIR] [--out data/mnist-desk]

Without --package the tarball is fetched with `npm pack mnist@1.1.0`.
"""

import argparse
import gzip
import json
import random
import struct
import subprocess
import tarfile
import tempfile
from pathlib import Path


def load_digits(package: Path):
    out = []
    for d in range(10):
        flat = json.loads((package / "src" / "digits" / f"{d}.json").read_text())["data"]
        n = len(flat) // 784
        for i in range(n):
            px = bytes(min(255, max(0, round(v * 255))) for v in flat[i * 784:(i + 1) * 784])
            out.append((px, d))
    return out


def write_idx(path: Path, images, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for px in images:
            f.write(px)
    lab = path.parent / path.name.replace("images-idx3", "labels-idx1")
    with gzip.GzipFile(lab, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def fetch(tmp: Path) -> Path:
    subprocess.run(["npm", "pack", "mnist@1.1.0", "--silent"], cwd=tmp, check=True)
    tgz = next(tmp.glob("mnist-*.tgz"))
    with tarfile.open(tgz) as t:
        t.extractall(tmp, filter="data")
    return tmp / "package"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--package", type=Path)
    ap.add_argument("--out", type=Path, default=Path("data/mnist-desk"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        package = args.package or fetch(Path(tmp))
        digits = load_digits(package)

    rng = random.Random(args.seed)
    train, test = [], []
    for d in range(10):
        group = [s for s in digits if s[1] == d]
        rng.shuffle(group)
        cut = round(0.8 * len(group))
        train += group[:cut]
        test += group[cut:]
    rng.shuffle(train)
    rng.shuffle(test)

    args.out.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train), ("t10k", test)):
        write_idx(args.out / f"{name}-images-idx3-ubyte.gz", [p for p, _ in part], [l for _, l in part])
        print(f"{name}: {len(part)} samples")


if __name__ == "__main__":
    main()
