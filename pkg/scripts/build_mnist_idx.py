"""Rebuild MNIST IDX files from the digits bundled in the ``mnist`` npm package.

The npm package (https://www.npmjs.com/package/mnist) ships 10,000 MNIST
digits as per-class JSON arrays of pixel/255 rounded to 3 decimals. There are
exactly 256 distinct values, so the original bytes are recovered exactly by
rank. The digits are shuffled with a fixed seed and split into train/t10k
files (gzip-compressed IDX).

Usage::

    npm pack mnist && tar xzf mnist-*.tgz
    python scripts/build_mnist_idx.py package/src/digits data/mnist
"""
import argparse
import gzip
import json
from pathlib import Path

import numpy as np

from snn_faultlab.mnist import (
    TEST_IMAGES,
    TEST_LABELS,
    TRAIN_IMAGES,
    TRAIN_LABELS,
    ImageSet,
    LabelSet,
    serialize_idx_images,
    serialize_idx_labels,
)


def load_digits(digits_dir: Path) -> tuple[np.ndarray, np.ndarray]:
    images, labels = [], []
    for digit in range(10):
        raw = np.array(json.loads((digits_dir / f"{digit}.json").read_text())["data"])
        images.append(raw.reshape(-1, 784))
        labels.append(np.full(len(images[-1]), digit, dtype=np.uint8))
    floats = np.concatenate(images)
    levels = np.unique(floats)
    if len(levels) != 256:
        raise SystemExit(f"expected 256 pixel levels, found {len(levels)}")
    pixels = np.searchsorted(levels, floats).astype(np.uint8)
    if not np.array_equal(pixels, np.round(floats * 255).astype(np.uint8)):
        raise SystemExit("rank decoding disagrees with rounding; refusing to write")
    return pixels, np.concatenate(labels)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits_dir", type=Path)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--n-train", type=int, default=6000)
    ap.add_argument("--seed", type=int, default=20211)
    args = ap.parse_args()

    pixels, labels = load_digits(args.digits_dir)
    order = np.random.default_rng(args.seed).permutation(len(labels))
    pixels, labels = pixels[order], labels[order]
    args.out_dir.mkdir(parents=True, exist_ok=True)
    n = args.n_train
    splits = {
        (TRAIN_IMAGES, TRAIN_LABELS): slice(0, n),
        (TEST_IMAGES, TEST_LABELS): slice(n, None),
    }
    for (img_name, lab_name), sl in splits.items():
        img = serialize_idx_images(ImageSet(pixels[sl].copy()))
        lab = serialize_idx_labels(LabelSet(labels[sl].copy()))
        # mtime=0 keeps the archives byte-reproducible
        (args.out_dir / f"{img_name}.gz").write_bytes(gzip.compress(img, mtime=0))
        (args.out_dir / f"{lab_name}.gz").write_bytes(gzip.compress(lab, mtime=0))
        print(f"{img_name}: {sl.stop - sl.start if sl.stop else len(labels) - n} images")


if __name__ == "__main__":
    main()
