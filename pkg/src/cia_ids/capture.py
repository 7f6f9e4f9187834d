"""Columnar packet captures.

A capture holds one numpy array per packet field so that multi-million
packet streams stay cheap. Individual :class:`~cia_ids.packet.Packet`
objects are materialized on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

import numpy as np

from .errors import CaptureValidationError
from .packet import HEADER_OVERHEAD, MAX_FRAME, MacAddr, Packet

NORMAL = "normal"
INTERFERENCE = "interference"
LABEL_CLASSES = {NORMAL: 0, INTERFERENCE: 1}


@dataclass(frozen=True)
class CaptureMeta:
    label_class: str = NORMAL
    seed: int | None = None
    spec_hash: str | None = None
    duration_s: float | None = None

    def __post_init__(self):
        if self.label_class not in LABEL_CLASSES:
            raise CaptureValidationError(f"unknown label class {self.label_class!r}")


@dataclass(eq=False)
class CaptureSet:
    timestamp_us: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    seq: np.ndarray
    length: np.ndarray
    source: np.ndarray          # index into source_names
    label: np.ndarray
    source_names: tuple[str, ...] = ()
    meta: CaptureMeta = field(default_factory=CaptureMeta)

    def __post_init__(self):
        self.timestamp_us = np.asarray(self.timestamp_us, dtype=np.int64)
        self.src = np.asarray(self.src, dtype=np.uint64)
        self.dst = np.asarray(self.dst, dtype=np.uint64)
        self.seq = np.asarray(self.seq, dtype=np.int16)
        self.length = np.asarray(self.length, dtype=np.int32)
        self.source = np.asarray(self.source, dtype=np.int32)
        self.label = np.asarray(self.label, dtype=np.int8)
        self.source_names = tuple(self.source_names)
        n = len(self.timestamp_us)
        for name in ("src", "dst", "seq", "length", "source", "label"):
            if len(getattr(self, name)) != n:
                raise CaptureValidationError(f"column {name} has {len(getattr(self, name))} rows, expected {n}")

    @classmethod
    def empty(cls, meta: CaptureMeta | None = None) -> "CaptureSet":
        z = np.zeros(0)
        return cls(z, z, z, z, z, z, z, (), meta or CaptureMeta())

    @classmethod
    def from_packets(cls, packets: Iterable[Packet], meta: CaptureMeta | None = None) -> "CaptureSet":
        packets = list(packets)
        names: dict[str, int] = {}
        codes = [names.setdefault(p.source_id, len(names)) for p in packets]
        return cls(
            [p.timestamp_us for p in packets],
            np.array([int(p.src) for p in packets], dtype=np.uint64),
            np.array([int(p.dst) for p in packets], dtype=np.uint64),
            [p.seq for p in packets],
            [p.length for p in packets],
            codes,
            [p.label for p in packets],
            tuple(names),
            meta or CaptureMeta(),
        )

    def __len__(self):
        return len(self.timestamp_us)

    def __getitem__(self, i) -> Packet:
        return Packet(
            int(self.timestamp_us[i]),
            MacAddr.from_int(int(self.src[i])),
            MacAddr.from_int(int(self.dst[i])),
            int(self.seq[i]),
            int(self.length[i]),
            self.source_names[self.source[i]],
            int(self.label[i]),
        )

    def __iter__(self) -> Iterator[Packet]:
        for i in range(len(self)):
            yield self[i]

    def source_ids(self) -> np.ndarray:
        """Per-packet source names as a string array."""
        if not self.source_names:
            return np.array([], dtype=str)
        return np.asarray(self.source_names)[self.source]

    def __eq__(self, other):
        if not isinstance(other, CaptureSet):
            return NotImplemented
        cols = ("timestamp_us", "src", "dst", "seq", "length", "label")
        return (
            len(self) == len(other)
            and all(np.array_equal(getattr(self, c), getattr(other, c)) for c in cols)
            and np.array_equal(self.source_ids(), other.source_ids())
            and self.meta == other.meta
        )

    @property
    def total_bytes(self) -> int:
        return int(self.length.sum(dtype=np.int64))

    @property
    def duration_s(self) -> float:
        if self.meta.duration_s is not None:
            return self.meta.duration_s
        if len(self) == 0:
            return 0.0
        return (int(self.timestamp_us[-1]) + 1) / 1e6

    def take(self, index) -> "CaptureSet":
        """Rows selected by a boolean mask or integer index array."""
        return CaptureSet(self.timestamp_us[index], self.src[index], self.dst[index],
                          self.seq[index], self.length[index], self.source[index],
                          self.label[index], self.source_names, self.meta)

    def for_destination(self, mac: MacAddr) -> "CaptureSet":
        return self.take(self.dst == np.uint64(int(mac)))

    def with_meta(self, **changes) -> "CaptureSet":
        return replace(self, meta=replace(self.meta, **changes))

    def validate(self) -> "CaptureSet":
        if len(self) == 0:
            return self
        if np.any(np.diff(self.timestamp_us) < 0):
            bad = int(np.argmax(np.diff(self.timestamp_us) < 0)) + 1
            raise CaptureValidationError(f"timestamps decrease at record {bad}")
        if self.seq.min() < 0 or self.seq.max() > 255:
            raise CaptureValidationError("seq outside 0..255")
        if self.length.min() < HEADER_OVERHEAD or self.length.max() > MAX_FRAME:
            raise CaptureValidationError(f"length outside {HEADER_OVERHEAD}..{MAX_FRAME}")
        expected = LABEL_CLASSES[self.meta.label_class]
        if np.any(self.label != expected):
            raise CaptureValidationError(
                f"{self.meta.label_class} capture must label every packet {expected}")
        return self


def merge(a: CaptureSet, b: CaptureSet, meta: CaptureMeta | None = None) -> CaptureSet:
    """Stable timestamp merge; on ties rows of ``a`` come first."""
    names = list(a.source_names)
    for n in b.source_names:
        if n not in names:
            names.append(n)
    remap = np.array([names.index(n) for n in b.source_names], dtype=np.int32)
    b_source = remap[b.source] if len(b) else b.source
    ts = np.concatenate([a.timestamp_us, b.timestamp_us])
    # stable sort keeps concatenation order among equal keys, so a wins ties
    order = np.argsort(ts, kind="stable")

    def cat(x, y):
        return np.concatenate([x, y])[order]

    return CaptureSet(
        ts[order], cat(a.src, b.src), cat(a.dst, b.dst), cat(a.seq, b.seq),
        cat(a.length, b.length), cat(a.source, b_source), cat(a.label, b.label),
        tuple(names), meta or a.meta,
    )

