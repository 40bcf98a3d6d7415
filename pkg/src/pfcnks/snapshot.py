"""Binary field snapshots and the relative l2 error between fields.

A snapshot is one ASCII header line followed by the raw field, little-endian
float64, x fastest:

    PFCSNAP 1 ndim=2 counts=64,64 lengths=32,32 time=0.5 step=10\\n
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

MAGIC = "PFCSNAP"
VERSION = 1


class SnapshotError(ValueError):
    pass


@dataclass
class Snapshot:
    counts: tuple[int, ...]
    lengths: tuple[float, ...]
    time: float
    step: int
    values: np.ndarray   # numpy layout, shape counts[::-1]

    @property
    def ndim(self) -> int:
        return len(self.counts)


def _fmt(v: float) -> str:
    return repr(float(v))


def encode_snapshot(values: np.ndarray, lengths, time: float = 0.0, step: int = 0) -> bytes:
    values = np.asarray(values, dtype=np.float64)
    counts = tuple(reversed(values.shape))
    if len(lengths) != len(counts):
        raise ValueError("lengths must have one entry per axis")
    header = (f"{MAGIC} {VERSION} ndim={len(counts)} counts={','.join(str(c) for c in counts)} "
              f"lengths={','.join(_fmt(v) for v in lengths)} time={_fmt(time)} step={int(step)}\n")
    return header.encode("ascii") + np.ascontiguousarray(values).astype("<f8").tobytes()


def write_snapshot(path, values: np.ndarray, lengths, time: float = 0.0, step: int = 0) -> None:
    data = encode_snapshot(values, lengths, time, step)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def decode_snapshot(data: bytes) -> Snapshot:
    end = data.find(b"\n")
    if end < 0:
        raise SnapshotError("missing snapshot header line")
    try:
        words = data[:end].decode("ascii").split()
    except UnicodeDecodeError:
        raise SnapshotError("snapshot header is not ASCII") from None
    if len(words) < 2 or words[0] != MAGIC:
        raise SnapshotError("not a snapshot file (bad format tag)")
    if words[1] != str(VERSION):
        raise SnapshotError(f"unsupported snapshot version {words[1]}")
    fields = {}
    for w in words[2:]:
        key, sep, val = w.partition("=")
        if not sep:
            raise SnapshotError(f"malformed header entry {w!r}")
        fields[key] = val
    try:
        ndim = int(fields["ndim"])
        counts = tuple(int(c) for c in fields["counts"].split(","))
        lengths = tuple(float(v) for v in fields["lengths"].split(","))
        time = float(fields["time"])
        step = int(fields["step"])
    except (KeyError, ValueError) as exc:
        raise SnapshotError(f"corrupt snapshot header: {exc}") from None
    if len(counts) != ndim or len(lengths) != ndim or any(c <= 0 for c in counts):
        raise SnapshotError("inconsistent snapshot header")
    payload = data[end + 1:]
    expected = math.prod(counts) * 8
    if len(payload) != expected:
        raise SnapshotError(f"payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(tuple(reversed(counts)))
    return Snapshot(counts, lengths, time, step, values)


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        return decode_snapshot(fh.read())


def l2_error(phi: np.ndarray, ref: np.ndarray) -> float:
    """Relative discrete l2 error ``sqrt(sum (phi - ref)^2 / sum ref^2)``."""
    phi = np.asarray(phi, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if phi.shape != ref.shape:
        raise ValueError(f"shape mismatch {phi.shape} vs {ref.shape}")
    denom = float(np.sum(ref * ref))
    if denom == 0.0:
        raise ValueError("reference field is identically zero")
    return math.sqrt(float(np.sum((phi - ref) ** 2)) / denom)
