"""Binary model snapshots.

Layout (all integers little-endian)::

    b"SNFL"  u16 version
    u32 len  config JSON (UTF-8)
    16 B     config fingerprint (ASCII hex)
    i64      seed
    u32 n_input, u32 n_exc
    f64[n_input * n_exc]  weights, row-major
    f64[n_exc]            theta
    i64[n_exc]            assignments
    8 B      blake2b digest of everything above
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from snn_faultlab.snn.network import NetworkConfig, TrainedModel

MAGIC = b"SNFL"
VERSION = 1
_DIGEST = 8


class SnapshotError(ValueError):
    pass


def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=_DIGEST).digest()


def dumps_model(model: TrainedModel) -> bytes:
    cfg_json = json.dumps(model.config.to_dict(), sort_keys=True).encode()
    fp = model.fingerprint.encode("ascii")
    n_input, n_exc = model.weights.shape
    parts = [
        MAGIC,
        struct.pack("<H", VERSION),
        struct.pack("<I", len(cfg_json)),
        cfg_json,
        fp,
        struct.pack("<qII", model.seed, n_input, n_exc),
        np.ascontiguousarray(model.weights, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.theta, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.assignments, dtype="<i8").tobytes(),
    ]
    body = b"".join(parts)
    return body + _checksum(body)


def loads_model(data: bytes) -> TrainedModel:
    if len(data) < 6 + _DIGEST or data[:4] != MAGIC:
        raise SnapshotError("not a model snapshot")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise SnapshotError(f"snapshot version {version} not supported (expected {VERSION})")
    body, digest = data[:-_DIGEST], data[-_DIGEST:]
    if _checksum(body) != digest:
        raise SnapshotError("snapshot checksum mismatch (corrupt or truncated file)")
    off = 6
    (cfg_len,) = struct.unpack_from("<I", body, off)
    off += 4
    config = NetworkConfig.from_dict(json.loads(body[off:off + cfg_len]))
    off += cfg_len
    fp = body[off:off + 16].decode("ascii")
    off += 16
    if fp != config.fingerprint():
        raise SnapshotError("config fingerprint does not match stored config")
    seed, n_input, n_exc = struct.unpack_from("<qII", body, off)
    off += struct.calcsize("<qII")

    def take(dtype, count):
        nonlocal off
        arr = np.frombuffer(body, dtype=dtype, count=count, offset=off)
        off += arr.nbytes
        return arr.astype(dtype[1:])

    weights = take("<f8", n_input * n_exc).reshape(n_input, n_exc)
    theta = take("<f8", n_exc)
    assignments = take("<i8", n_exc)
    if off != len(body):
        raise SnapshotError("snapshot payload has unexpected length")
    return TrainedModel(config, weights, theta, assignments, int(seed))


def save_model(model: TrainedModel, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_model(model))
    return path


def load_model(path: Path | str) -> TrainedModel:
    return loads_model(Path(path).read_bytes())
