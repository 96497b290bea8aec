import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snn_faultlab import mnist
from snn_faultlab.mnist import (
    IdxFormatError,
    ImageSet,
    LabelSet,
    parse_idx_images,
    parse_idx_labels,
    select_subset,
    serialize_idx_images,
    serialize_idx_labels,
)


def image_stream(count, rows=28, cols=28, payload=None, magic=2051):
    if payload is None:
        payload = bytes(range(256)) * (count * rows * cols // 256 + 1)
        payload = payload[: count * rows * cols]
    return struct.pack(">4I", magic, count, rows, cols) + payload


def test_parse_two_images():
    data = image_stream(2)
    images = parse_idx_images(data)
    assert images.count == 2
    assert images.pixels.shape == (2, 784)
    assert images.pixels[0, 255] == 255 and images.pixels[1, 0] == (784 % 256)


def test_label_magic_in_image_parser():
    with pytest.raises(IdxFormatError, match="not an image file"):
        parse_idx_images(image_stream(1, magic=2049))


def test_truncated_images():
    with pytest.raises(IdxFormatError, match="truncated"):
        parse_idx_images(image_stream(1, payload=bytes(783)))


def test_trailing_bytes_rejected():
    with pytest.raises(IdxFormatError, match="trailing"):
        parse_idx_images(image_stream(1, payload=bytes(785)))


def test_odd_geometry_strictness(caplog):
    data = image_stream(1, rows=20, cols=20, payload=bytes(400))
    with pytest.raises(IdxFormatError):
        parse_idx_images(data)
    images = parse_idx_images(data, strict=False)
    assert images.rows == 20 and images.pixels.shape == (1, 400)
    assert "20x20" in caplog.text


def test_parse_labels():
    data = struct.pack(">2I", 2049, 3) + bytes([7, 0, 9])
    assert parse_idx_labels(data).labels.tolist() == [7, 0, 9]


def test_label_out_of_range():
    data = struct.pack(">2I", 2049, 1) + bytes([12])
    with pytest.raises(IdxFormatError):
        parse_idx_labels(data)


def test_empty_label_stream():
    with pytest.raises(IdxFormatError):
        parse_idx_labels(b"")


def test_truncated_labels():
    with pytest.raises(IdxFormatError):
        parse_idx_labels(struct.pack(">2I", 2049, 4) + bytes([1, 2]))


@settings(max_examples=25)
@given(st.integers(0, 5), st.data())
def test_image_round_trip(count, data):
    raw = data.draw(st.binary(min_size=count * 784, max_size=count * 784))
    stream = image_stream(count, payload=raw)
    assert serialize_idx_images(parse_idx_images(stream)) == stream


@given(st.lists(st.integers(0, 9), max_size=50))
def test_label_round_trip(labels):
    stream = struct.pack(">2I", 2049, len(labels)) + bytes(labels)
    assert serialize_idx_labels(parse_idx_labels(stream)) == stream


def test_gzip_transparent(tmp_path):
    stream = image_stream(3)
    (tmp_path / "x.gz").write_bytes(gzip.compress(stream))
    (tmp_path / "x").write_bytes(stream)
    assert mnist.read_bytes(tmp_path / "x.gz") == mnist.read_bytes(tmp_path / "x") == stream


def test_load_pair_count_mismatch(tmp_path):
    (tmp_path / "i").write_bytes(image_stream(2))
    (tmp_path / "l").write_bytes(struct.pack(">2I", 2049, 3) + bytes(3))
    with pytest.raises(IdxFormatError, match="does not match"):
        mnist.load_pair(tmp_path / "i", tmp_path / "l")


def _dataset(n):
    rng = np.random.default_rng(0)
    pixels = rng.integers(0, 256, size=(n, 784), dtype=np.uint8)
    # tag each image with its own index so subsets can be traced back
    pixels[:, 0] = np.arange(n) % 256
    pixels[:, 1] = np.arange(n) // 256
    return ImageSet(pixels), LabelSet((np.arange(n) % 10).astype(np.uint8))


def _indices(images):
    return images.pixels[:, 0].astype(int) + 256 * images.pixels[:, 1].astype(int)


def test_subset_full_is_permutation():
    images, labels = _dataset(50)
    sub, _ = select_subset(images, labels, 50, seed=3)
    assert sorted(_indices(sub)) == list(range(50))


def test_subset_deterministic():
    images, labels = _dataset(100)
    a = select_subset(images, labels, 10, seed=1)
    b = select_subset(images, labels, 10, seed=1)
    assert np.array_equal(a[0].pixels, b[0].pixels)
    assert np.array_equal(a[1].labels, b[1].labels)


def test_subset_seed_changes_indices():
    images, labels = _dataset(60000 // 20)
    a, _ = select_subset(images, labels, 500, seed=1)
    b, _ = select_subset(images, labels, 500, seed=2)
    assert _indices(a).tolist() != _indices(b).tolist()


def test_subset_keeps_pairs():
    images, labels = _dataset(100)
    sub_i, sub_l = select_subset(images, labels, 30, seed=9)
    assert np.array_equal(_indices(sub_i) % 10, sub_l.labels)


def test_subset_too_large():
    images, labels = _dataset(5)
    with pytest.raises(ValueError):
        select_subset(images, labels, 6, seed=0)


def test_bundled_dataset_loads(data_dir):
    train_i, train_l = mnist.load_split(data_dir, "train")
    test_i, test_l = mnist.load_split(data_dir, "test")
    assert train_i.count == train_l.count and test_i.count == test_l.count
    assert train_i.pixels.shape[1] == 784
    assert set(np.unique(train_l.labels)) == set(range(10))
