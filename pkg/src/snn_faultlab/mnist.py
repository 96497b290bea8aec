"""MNIST IDX container parsing and deterministic subset selection.

The IDX layout is big-endian::

    images: magic 2051 | count | rows | cols | count*rows*cols unsigned bytes
    labels: magic 2049 | count | count unsigned bytes
"""
from __future__ import annotations

import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049
MNIST_SIDE = 28
N_CLASSES = 10

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


class IdxFormatError(ValueError):
    """Raised for malformed IDX streams."""


@dataclass(frozen=True)
class ImageSet:
    pixels: np.ndarray  # (count, rows*cols) uint8, row-major
    rows: int = MNIST_SIDE
    cols: int = MNIST_SIDE

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.shape[1] != self.rows * self.cols:
            raise ValueError(
                f"pixels must have shape (count, {self.rows * self.cols}), got {self.pixels.shape}"
            )
        if self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be uint8")
        self.pixels.setflags(write=False)

    @property
    def count(self) -> int:
        return self.pixels.shape[0]

    def __len__(self) -> int:
        return self.count


@dataclass(frozen=True)
class LabelSet:
    labels: np.ndarray  # (count,) uint8

    def __post_init__(self):
        if self.labels.ndim != 1 or self.labels.dtype != np.uint8:
            raise ValueError("labels must be a 1-d uint8 array")
        if self.labels.size and int(self.labels.max()) >= N_CLASSES:
            raise ValueError(f"label {int(self.labels.max())} out of range 0-9")
        self.labels.setflags(write=False)

    @property
    def count(self) -> int:
        return self.labels.shape[0]

    def __len__(self) -> int:
        return self.count


def _header(data: bytes, n_fields: int, what: str) -> tuple[int, ...]:
    size = 4 * n_fields
    if len(data) < size:
        raise IdxFormatError(f"{what}: stream too short for header ({len(data)} bytes)")
    return struct.unpack(f">{n_fields}I", data[:size])


def _payload(data: bytes, offset: int, expected: int, what: str) -> bytes:
    got = len(data) - offset
    if got < expected:
        raise IdxFormatError(f"{what}: truncated payload, expected {expected} bytes, got {got}")
    if got > expected:
        raise IdxFormatError(f"{what}: {got - expected} trailing bytes after declared payload")
    return data[offset:]


def parse_idx_images(data: bytes, strict: bool = True) -> ImageSet:
    """Parse an IDX3 image stream.

    Non-28x28 images raise when ``strict`` is set, otherwise only log a warning.
    """
    magic = _header(data, 1, "images")[0]
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(f"not an image file (magic {magic}, expected {IMAGE_MAGIC})")
    _, count, rows, cols = _header(data, 4, "images")
    if (rows, cols) != (MNIST_SIDE, MNIST_SIDE):
        msg = f"images are {rows}x{cols}, expected {MNIST_SIDE}x{MNIST_SIDE}"
        if strict:
            raise IdxFormatError(msg)
        log.warning(msg)
    raw = _payload(data, 16, count * rows * cols, "images")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols).copy()
    return ImageSet(pixels, rows, cols)


def parse_idx_labels(data: bytes) -> LabelSet:
    magic = _header(data, 1, "labels")[0]
    if magic != LABEL_MAGIC:
        raise IdxFormatError(f"not a label file (magic {magic}, expected {LABEL_MAGIC})")
    _, count = _header(data, 2, "labels")
    raw = _payload(data, 8, count, "labels")
    labels = np.frombuffer(raw, dtype=np.uint8).copy()
    if labels.size and int(labels.max()) >= N_CLASSES:
        bad = int(labels.max())
        raise IdxFormatError(f"label {bad} out of range 0-{N_CLASSES - 1}")
    return LabelSet(labels)


def serialize_idx_images(images: ImageSet) -> bytes:
    header = struct.pack(">4I", IMAGE_MAGIC, images.count, images.rows, images.cols)
    return header + images.pixels.tobytes()


def serialize_idx_labels(labels: LabelSet) -> bytes:
    return struct.pack(">2I", LABEL_MAGIC, labels.count) + labels.labels.tobytes()


def read_bytes(path: str | Path) -> bytes:
    """Read a file, transparently decompressing gzip content."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def resolve_idx(directory: str | Path, stem: str) -> Path:
    """Find ``stem`` or ``stem.gz`` inside ``directory``."""
    directory = Path(directory)
    for name in (stem, stem + ".gz"):
        p = directory / name
        if p.exists():
            return p
    raise FileNotFoundError(f"neither {stem} nor {stem}.gz found in {directory}")


def load_pair(images_path: str | Path, labels_path: str | Path) -> tuple[ImageSet, LabelSet]:
    images = parse_idx_images(read_bytes(images_path))
    labels = parse_idx_labels(read_bytes(labels_path))
    if images.count != labels.count:
        raise IdxFormatError(
            f"image count {images.count} does not match label count {labels.count}"
        )
    return images, labels


def load_split(directory: str | Path, split: str = "train") -> tuple[ImageSet, LabelSet]:
    stems = {"train": (TRAIN_IMAGES, TRAIN_LABELS), "test": (TEST_IMAGES, TEST_LABELS)}
    img, lab = stems[split]
    return load_pair(resolve_idx(directory, img), resolve_idx(directory, lab))


def select_subset(
    images: ImageSet, labels: LabelSet, n: int, seed: int
) -> tuple[ImageSet, LabelSet]:
    """Seeded sample of ``n`` items without replacement, kept in draw order."""
    if images.count != labels.count:
        raise ValueError("images and labels differ in count")
    if n < 0 or n > images.count:
        raise ValueError(f"cannot draw {n} samples from {images.count}")
    idx = np.random.default_rng(seed).permutation(images.count)[:n]
    return (
        ImageSet(images.pixels[idx].copy(), images.rows, images.cols),
        LabelSet(labels.labels[idx].copy()),
    )
