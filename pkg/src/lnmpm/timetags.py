"""Time-tag streams and their on-disk formats.

Binary layout (little endian)::

    header  16 bytes  magic b"TTAG", version u16, channel count u16, duration_ps u64
    record   9 bytes  channel u8, timestamp_ps u64      (repeated, time ordered)

The CSV alternative has a ``channel,timestamp_ps`` header row.
"""
from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["TimeTagStream", "write_ttag", "read_ttag", "write_csv", "read_csv", "MAGIC", "VERSION"]

MAGIC = b"TTAG"
VERSION = 1
HEADER = struct.Struct("<4sHHQ")
RECORD = np.dtype([("channel", "u1"), ("timestamp", "<u8")])

PS_PER_S = 1e12


@dataclass(frozen=True, eq=False)
class TimeTagStream:
    """Time-ordered detection events.

    ``timestamps`` are integer picoseconds from the start of the record and
    ``channels`` index into ``labels``.
    """

    channels: np.ndarray
    timestamps: np.ndarray
    duration: float  # s
    labels: tuple

    def __post_init__(self):
        ch = np.ascontiguousarray(self.channels, dtype=np.uint8)
        ts = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        if ch.shape != ts.shape or ch.ndim != 1:
            raise ValueError("channels and timestamps must be 1-D arrays of equal length")
        if ts.size and np.any(np.diff(ts) < 0):
            raise ValueError("timestamps must be non-decreasing")
        if ts.size and ts[0] < 0:
            raise ValueError("timestamps must be non-negative")
        if ch.size and int(ch.max()) >= len(self.labels):
            raise ValueError(f"channel id {int(ch.max())} has no label")
        object.__setattr__(self, "channels", ch)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self):
        return int(self.timestamps.size)

    @property
    def duration_ps(self) -> int:
        return int(round(self.duration * PS_PER_S))

    def channel_id(self, channel) -> int:
        if isinstance(channel, str):
            return self.labels.index(channel)
        return int(channel)

    def times(self, channel) -> np.ndarray:
        """Timestamps (ps) of one channel, given by id or label."""
        return self.timestamps[self.channels == self.channel_id(channel)]

    def counts(self) -> dict:
        ids, n = np.unique(self.channels, return_counts=True)
        out = {label: 0 for label in self.labels}
        for i, c in zip(ids, n):
            out[self.labels[i]] = int(c)
        return out

    def rates(self) -> dict:
        return {k: v / self.duration for k, v in self.counts().items()}

    def equals(self, other: "TimeTagStream") -> bool:
        return (
            self.labels == other.labels
            and self.duration_ps == other.duration_ps
            and np.array_equal(self.channels, other.channels)
            and np.array_equal(self.timestamps, other.timestamps)
        )


def write_ttag(stream: TimeTagStream, path) -> Path:
    path = Path(path)
    records = np.empty(len(stream), dtype=RECORD)
    records["channel"] = stream.channels
    records["timestamp"] = stream.timestamps.astype(np.uint64)
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, len(stream.labels), stream.duration_ps))
        fh.write(records.tobytes())
    return path


def read_ttag(path, labels=None) -> TimeTagStream:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n_channels, duration_ps = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    body = raw[HEADER.size:]
    if len(body) % RECORD.itemsize:
        raise ValueError(f"{path}: body length {len(body)} is not a multiple of {RECORD.itemsize}")
    records = np.frombuffer(body, dtype=RECORD)
    if labels is None:
        labels = tuple(f"ch{i}" for i in range(n_channels))
    if len(labels) != n_channels:
        raise ValueError(f"{path}: {n_channels} channels but {len(labels)} labels")
    return TimeTagStream(
        channels=records["channel"].copy(),
        timestamps=records["timestamp"].astype(np.int64),
        duration=duration_ps / PS_PER_S,
        labels=tuple(labels),
    )


def write_csv(stream: TimeTagStream, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel", "timestamp_ps"])
        w.writerows(zip(stream.channels.tolist(), stream.timestamps.tolist()))
    return path


def read_csv(path, labels, duration: float) -> TimeTagStream:
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="loadtxt: input contained no data")
        data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    if data.size == 0:
        data = np.zeros((0, 2), dtype=np.int64)
    return TimeTagStream(channels=data[:, 0], timestamps=data[:, 1], duration=duration, labels=tuple(labels))
