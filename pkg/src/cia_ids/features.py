"""Packet-length windows and 2-gram length histograms."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .capture import CaptureSet
from .errors import DegenerateScaleError, InsufficientDataError, InvalidArgumentError
from .packet import MacAddr


@dataclass
class WindowMatrix:
    """``n`` windows of ``window`` consecutive packet lengths.

    ``labels`` holds the mean per-packet label of each window. ``bounds`` is
    the (min, max) pair used to scale ``data`` into [0, 1], or None while
    the data are raw lengths.
    """

    window: int
    data: np.ndarray
    raw_labels: np.ndarray
    labels: np.ndarray
    stride: int
    bounds: tuple[float, float] | None = None

    def __len__(self):
        return len(self.data)

    def truth(self, threshold: float = 0.5) -> np.ndarray:
        return (self.labels >= threshold).astype(np.int8)

    def subset(self, index) -> "WindowMatrix":
        return replace(self, data=self.data[index], raw_labels=self.raw_labels[index],
                       labels=self.labels[index])


def _windows(values: np.ndarray, window: int, stride: int) -> np.ndarray:
    if len(values) < window:
        return np.zeros((0, window), dtype=values.dtype)
    return sliding_window_view(values, window)[::stride]


def make_windows(captures: CaptureSet | Sequence[CaptureSet], window: int,
                 stride: int | None = None) -> WindowMatrix:
    """Cut each capture's length sequence into windows.

    Windows start at offsets 0, stride, 2*stride, ... and never cross from
    one capture into the next; a trailing piece shorter than ``window`` is
    dropped. ``stride=None`` means ``stride=window`` (plain reshape).
    """
    if isinstance(captures, CaptureSet):
        captures = [captures]
    if window < 2:
        raise InvalidArgumentError(f"window must be >= 2, got {window}")
    stride = window if stride is None else stride
    if not 1 <= stride <= window:
        raise InvalidArgumentError(f"stride must be in 1..{window}, got {stride}")

    longest = max((len(c) for c in captures), default=0)
    if longest < window:
        raise InsufficientDataError(window, longest)

    data = np.concatenate([_windows(c.length.astype(np.float64), window, stride)
                           for c in captures])
    raw = np.concatenate([_windows(c.label.astype(np.float64), window, stride)
                          for c in captures])
    return WindowMatrix(window, np.ascontiguousarray(data), np.ascontiguousarray(raw),
                        raw.mean(axis=1), stride)


def scale(values, bounds: tuple[float, float]) -> np.ndarray:
    lo, hi = bounds
    return np.clip((np.asarray(values, dtype=np.float64) - lo) / (hi - lo), 0.0, 1.0)


def normalize(wm: WindowMatrix, bounds: tuple[float, float] | None = None) -> WindowMatrix:
    """Min-max scale raw lengths to [0, 1].

    Without ``bounds`` they are fitted on ``wm`` itself (use the training
    split); given bounds are reused as-is and out-of-range values clip.
    """
    if wm.bounds is not None:
        raise InvalidArgumentError("window matrix is already normalized")
    if bounds is None:
        if wm.data.size == 0:
            raise DegenerateScaleError("cannot fit a scale on an empty window matrix")
        bounds = (float(wm.data.min()), float(wm.data.max()))
    lo, hi = map(float, bounds)
    if not hi > lo:
        raise DegenerateScaleError(f"scale needs max > min, got min={lo} max={hi}")
    return replace(wm, data=scale(wm.data, (lo, hi)), bounds=(lo, hi))


class BigramHistogram:
    """Counts of adjacent (length_a, length_b) pairs."""

    def __init__(self, counts=None):
        self.counts = Counter(counts or {})

    def __getitem__(self, key):
        return self.counts.get(key, 0)

    def __eq__(self, other):
        if not isinstance(other, BigramHistogram):
            return NotImplemented
        return +self.counts == +other.counts

    def __add__(self, other: "BigramHistogram") -> "BigramHistogram":
        return BigramHistogram(self.counts + other.counts)

    def keys(self) -> set[tuple[int, int]]:
        return {k for k, v in self.counts.items() if v > 0}

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_csv(self, path) -> None:
        with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("len_a,len_b,count\n")
            for (a, b), n in sorted(self.counts.items()):
                fh.write(f"{a},{b},{n}\n")

    @classmethod
    def from_csv(cls, path) -> "BigramHistogram":
        counts = {}
        with open(Path(path), encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                a, b, n = map(int, line.split(","))
                counts[(a, b)] = n
        return cls(counts)

    def matrix(self):
        """Dense heatmap: (row_lengths, col_lengths, counts[len_a, len_b])."""
        a_vals = sorted({a for a, _ in self.counts})
        b_vals = sorted({b for _, b in self.counts})
        ai = {v: i for i, v in enumerate(a_vals)}
        bi = {v: i for i, v in enumerate(b_vals)}
        m = np.zeros((len(a_vals), len(b_vals)), dtype=np.int64)
        for (a, b), n in self.counts.items():
            m[ai[a], bi[b]] = n
        return np.array(a_vals), np.array(b_vals), m


def bigram_histogram(source: CaptureSet | Sequence[int], dst: MacAddr | None = None
                     ) -> BigramHistogram:
    """2-gram histogram of a capture's length sequence (optionally one destination)."""
    if isinstance(source, CaptureSet):
        if dst is not None:
            source = source.for_destination(dst)
        lengths = source.length
    else:
        lengths = np.asarray(source)
    lengths = lengths.astype(np.int64)
    if len(lengths) < 2:
        raise InsufficientDataError(2, len(lengths))
    keys = lengths[:-1] * 65536 + lengths[1:]
    uniq, counts = np.unique(keys, return_counts=True)
    return BigramHistogram({(int(k // 65536), int(k % 65536)): int(n)
                            for k, n in zip(uniq, counts)})
