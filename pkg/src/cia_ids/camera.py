"""Synthetic camera streams.

Each camera emits frames at a fixed rate with a fixed GOP (one I-frame
followed by P-frames). A frame is coded as a number of slices proportional
to its size; each slice is one payload unit that gets FU-A fragmented and
packetized. Packets of a frame are spread evenly over the frame interval.

The default profile is tuned so that a generated capture reproduces the
aggregate statistics of the reference benign drive: 6,346,876 packets and
about 5.86e9 bytes over 1800 s, i.e. ~3526 packets/s at ~923 bytes each.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import truncnorm

from .capture import CaptureMeta, CaptureSet, merge
from .errors import InvalidArgumentError
from .packet import (DEFAULT_MAX_BODY, HEADER_OVERHEAD, MacAddr, PayloadUnit,
                     fragment_unit, packetize)

FRONT_CAMERA = MacAddr.parse("02:00:00:00:0c:01")
LEFT_CAMERA = MacAddr.parse("02:00:00:00:0c:02")
FRONT_DISPLAY = MacAddr.parse("02:00:00:00:0d:01")
LEFT_DISPLAY = MacAddr.parse("02:00:00:00:0d:02")

# calibration targets taken from the reference benign capture
REFERENCE_PACKETS = 6_346_876
REFERENCE_BYTES = 5.86e9
REFERENCE_DURATION_S = 1800.0
TARGET_RATE = REFERENCE_PACKETS / REFERENCE_DURATION_S       # ~3526 pkt/s
TARGET_MEAN_LENGTH = REFERENCE_BYTES / REFERENCE_PACKETS     # ~923 bytes

IDR_SLICE = 5
NON_IDR_SLICE = 1


@dataclass(frozen=True)
class CameraProfile:
    """Frame-size model of one camera.

    Sizes are ``(mean, jitter)`` pairs in bytes; draws come from a normal
    with standard deviation ``jitter / 2`` truncated to ``mean ± jitter``.
    """

    camera_id: str
    fps: float
    gop_length: int
    i_frame_size: tuple[float, float]
    p_frame_size: tuple[float, float]
    src: MacAddr
    dst: MacAddr
    slice_size: tuple[float, float] = (1738.0, 300.0)
    slice_align: int = 4
    max_body: int = DEFAULT_MAX_BODY

    def __post_init__(self):
        if self.fps <= 0:
            raise InvalidArgumentError("fps must be positive")
        if self.gop_length < 1:
            raise InvalidArgumentError("gop_length must be >= 1")
        for name in ("i_frame_size", "p_frame_size", "slice_size"):
            mean, jitter = getattr(self, name)
            if mean < 1 or jitter < 0 or jitter >= mean or mean - jitter < 1:
                raise InvalidArgumentError(f"{name} needs mean >= 1 and 0 <= jitter < mean")
        if self.slice_align < 1 or self.max_body < 1:
            raise InvalidArgumentError("slice_align and max_body must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["src"], d["dst"] = str(self.src), str(self.dst)
        return d


@dataclass(frozen=True)
class StreamSpec:
    duration_s: float
    profiles: tuple[CameraProfile, ...]
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if self.duration_s <= 0:
            raise InvalidArgumentError("duration_s must be positive")
        if not self.profiles:
            raise InvalidArgumentError("at least one camera profile is required")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidArgumentError("rng_seed must fit in 64 bits")

    def digest(self) -> str:
        blob = json.dumps({"duration_s": self.duration_s, "rng_seed": self.rng_seed,
                           "profiles": [p.to_dict() for p in self.profiles]},
                          sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def derive_default_profile(camera_id: str = "front", src: MacAddr = FRONT_CAMERA,
                           dst: MacAddr = FRONT_DISPLAY) -> CameraProfile:
    # Slices sit between one and two full bodies, so every slice is a
    # (1474, tail) pair. Mean slice 1738 -> mean length (1474 + 54 + 318) / 2 ~ 923.
    # 58.77 slices/frame * 2 packets * 30 fps ~ 3526 packets/s.
    return CameraProfile(
        camera_id=camera_id,
        fps=30.0,
        gop_length=30,
        i_frame_size=(292_200.0, 40_000.0),
        p_frame_size=(95_600.0, 20_000.0),
        src=src,
        dst=dst,
        slice_size=(1738.0, 300.0),
    )


def derive_left_profile() -> CameraProfile:
    """Left around-view camera: same hardware as the front one, own addresses."""
    return derive_default_profile("left", LEFT_CAMERA, LEFT_DISPLAY)


def expected_rate(profile: CameraProfile) -> float:
    """Approximate packets/s, ignoring jitter-induced rounding effects."""
    smean = profile.slice_size[0]
    i_slices = max(1.0, round(profile.i_frame_size[0] / smean))
    p_slices = max(1.0, round(profile.p_frame_size[0] / smean))
    g = profile.gop_length
    per_frame = (i_slices + (g - 1) * p_slices) / g
    return per_frame * (smean // profile.max_body + 1) * profile.fps


def _truncated(rng, mean, jitter, size):
    if jitter == 0:
        return np.full(size, float(mean))
    sd = jitter / 2.0
    return truncnorm.rvs(-2.0, 2.0, loc=mean, scale=sd, size=size, random_state=rng)


def frame_count(profile: CameraProfile, duration_s: float) -> int:
    return int(np.floor(duration_s * profile.fps + 1e-9))


def draw_slices(profile: CameraProfile, n_frames: int, rng: np.random.Generator):
    """Random slice layout for ``n_frames`` frames.

    Returns ``(frame_of_slice, slice_bytes, unit_type)`` arrays.
    """
    if n_frames == 0:
        e = np.zeros(0, dtype=np.int64)
        return e, e.copy(), e.copy()
    is_i = np.arange(n_frames) % profile.gop_length == 0
    sizes = np.empty(n_frames)
    sizes[is_i] = _truncated(rng, *profile.i_frame_size, int(is_i.sum()))
    sizes[~is_i] = _truncated(rng, *profile.p_frame_size, int((~is_i).sum()))
    per_frame = np.maximum(1, np.rint(sizes / profile.slice_size[0])).astype(np.int64)
    frame_of_slice = np.repeat(np.arange(n_frames), per_frame)
    raw = _truncated(rng, *profile.slice_size, len(frame_of_slice))
    a = profile.slice_align
    slice_bytes = np.maximum(a, np.rint(raw / a).astype(np.int64) * a)
    unit_type = np.where(is_i[frame_of_slice], IDR_SLICE, NON_IDR_SLICE)
    return frame_of_slice, slice_bytes, unit_type


def _frame_starts_us(profile, n_frames):
    return np.floor(np.arange(n_frames + 1) * (1e6 / profile.fps)).astype(np.int64)


def camera_capture(profile: CameraProfile, duration_s: float, rng: np.random.Generator,
                   offset_us: int = 0, label: int = 0, start_seq: int = 0) -> CaptureSet:
    """Packet stream of a single camera, computed without materializing payloads."""
    n_frames = frame_count(profile, duration_s)
    frame_of_slice, slice_bytes, _ = draw_slices(profile, n_frames, rng)
    mb = profile.max_body
    per_slice = np.maximum(1, -(-slice_bytes // mb))
    n = int(per_slice.sum())

    lengths = np.full(n, HEADER_OVERHEAD + mb, dtype=np.int32)
    last = np.cumsum(per_slice) - 1
    lengths[last] = HEADER_OVERHEAD + slice_bytes - mb * (per_slice - 1)

    frame_of_pkt = np.repeat(frame_of_slice, per_slice)
    per_frame = np.bincount(frame_of_pkt, minlength=n_frames)
    first_of_frame = np.concatenate([[0], np.cumsum(per_frame)[:-1]])
    k = np.arange(n) - first_of_frame[frame_of_pkt]
    starts = _frame_starts_us(profile, n_frames)
    interval = (starts[1:] - starts[:-1])[frame_of_pkt]
    ts = offset_us + starts[frame_of_pkt] + (k * interval) // per_frame[frame_of_pkt]

    return CaptureSet(
        ts,
        np.full(n, int(profile.src), dtype=np.uint64),
        np.full(n, int(profile.dst), dtype=np.uint64),
        (start_seq + np.arange(n)) % 256,
        lengths,
        np.zeros(n, dtype=np.int32),
        np.full(n, label, dtype=np.int8),
        (profile.camera_id,),
    )


def camera_packets_reference(profile: CameraProfile, duration_s: float,
                             rng: np.random.Generator, offset_us: int = 0):
    """Same stream as :func:`camera_capture`, built by fragmenting real payload
    units and packetizing them one by one. Slow; for cross-checking."""
    n_frames = frame_count(profile, duration_s)
    frame_of_slice, slice_bytes, unit_type = draw_slices(profile, n_frames, rng)
    starts = _frame_starts_us(profile, n_frames)
    frames: list[list] = [[] for _ in range(n_frames)]
    for f, size, ut in zip(frame_of_slice, slice_bytes, unit_type):
        unit = PayloadUnit(int(ut), bytes(int(size)))
        frames[f].extend(fragment_unit(unit, profile.max_body))
    packets = []
    seq = 0
    for f, frags in enumerate(frames):
        start, interval, m = starts[f], starts[f + 1] - starts[f], len(frags)
        packets.extend(packetize(frags, profile.src, profile.dst, profile.camera_id,
                                 start_seq=seq,
                                 clock=lambda k: offset_us + start + (k * interval) // m))
        seq = (seq + m) % 256
    return packets


def generate_stream(spec: StreamSpec) -> CaptureSet:
    """Benign capture of every camera in ``spec``, merged by timestamp."""
    seed_seq = np.random.SeedSequence(spec.rng_seed)
    rngs = [np.random.default_rng(s) for s in seed_seq.spawn(len(spec.profiles))]
    out = CaptureSet.empty()
    for profile, rng in zip(spec.profiles, rngs):
        out = merge(out, camera_capture(profile, spec.duration_s, rng))
    return out.with_meta(label_class="normal", seed=spec.rng_seed,
                         spec_hash=spec.digest(), duration_s=float(spec.duration_s))


def default_spec(duration_s: float = 60.0, seed: int = 0) -> StreamSpec:
    return StreamSpec(duration_s, (derive_default_profile(),), seed)
