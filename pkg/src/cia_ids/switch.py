"""Switch forwarding table, cache poisoning and stream interference."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .camera import CameraProfile, camera_capture, derive_left_profile, FRONT_DISPLAY
from .capture import CaptureSet, merge
from .errors import InvalidArgumentError, UnknownDestinationError
from .packet import MacAddr

DISPLAY_PORT = 11
ATTACKER_PORT = 5


class ForwardingTable(Mapping):
    """Immutable MAC -> port mapping. Updates return a new table."""

    def __init__(self, entries: Mapping[MacAddr, int] | None = None):
        self._entries = dict(entries or {})
        for mac, port in self._entries.items():
            if not isinstance(mac, MacAddr):
                raise InvalidArgumentError(f"table keys must be MacAddr, got {mac!r}")
            if port < 1:
                raise InvalidArgumentError(f"port must be >= 1, got {port}")

    def __getitem__(self, mac: MacAddr) -> int:
        return self._entries[mac]

    def __iter__(self) -> Iterator[MacAddr]:
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return dict(self.items()) == dict(other.items())
        return NotImplemented

    def __repr__(self):
        return f"ForwardingTable({ {str(k): v for k, v in self._entries.items()} })"

    def dump(self) -> str:
        """Text form sorted by address: ``<mac> <port>`` per line."""
        return "".join(f"{mac} {port}\n" for mac, port in sorted(self._entries.items()))

    @classmethod
    def parse(cls, text: str) -> "ForwardingTable":
        entries = {}
        for line in text.splitlines():
            if line.strip():
                mac, port = line.split()
                entries[MacAddr.parse(mac)] = int(port)
        return cls(entries)


@dataclass(frozen=True)
class AttackPlan:
    victim_dst: MacAddr
    attacker_port: int
    injected_profile: CameraProfile
    start_s: float
    end_s: float

    def __post_init__(self):
        if not 0 <= self.start_s < self.end_s:
            raise InvalidArgumentError("attack window needs 0 <= start_s < end_s")
        if self.attacker_port < 1:
            raise InvalidArgumentError("attacker_port must be >= 1")


def default_plan(start_s: float, end_s: float) -> AttackPlan:
    return AttackPlan(FRONT_DISPLAY, ATTACKER_PORT, derive_left_profile(), start_s, end_s)


def learn(table: ForwardingTable, src: MacAddr, port: int) -> ForwardingTable:
    if port < 1:
        raise InvalidArgumentError(f"port must be >= 1, got {port}")
    entries = dict(table)
    entries[src] = port
    return ForwardingTable(entries)


def poison(table: ForwardingTable, plan: AttackPlan) -> ForwardingTable:
    """Point the victim's entry at the attacker's port."""
    if plan.victim_dst not in table:
        raise UnknownDestinationError(f"{plan.victim_dst} is not in the forwarding table")
    if table[plan.victim_dst] == plan.attacker_port:
        return table
    entries = dict(table)
    entries[plan.victim_dst] = plan.attacker_port
    return ForwardingTable(entries)


def apply_interference(benign: CaptureSet, plan: AttackPlan, rng_seed: int) -> CaptureSet:
    """Mix a redirected camera stream into ``benign`` during the plan window.

    The injected packets are addressed to the victim, keep their own
    sequence counter and are merged by timestamp (benign first on ties).
    Every packet of the result is labelled 1.
    """
    benign.validate()
    if benign.meta.label_class != "normal":
        raise InvalidArgumentError("interference must be applied to a normal capture")
    if plan.end_s > benign.duration_s + 1e-9:
        raise InvalidArgumentError(
            f"attack window [{plan.start_s}, {plan.end_s}] s exceeds capture "
            f"duration {benign.duration_s} s")

    rng = np.random.default_rng(np.random.SeedSequence([rng_seed, 0xC1A]))
    injected = camera_capture(plan.injected_profile, plan.end_s - plan.start_s, rng,
                              offset_us=int(round(plan.start_s * 1e6)))
    injected.dst[:] = np.uint64(int(plan.victim_dst))

    out = merge(benign, injected)
    out.label[:] = 1
    return out.with_meta(label_class="interference", seed=rng_seed)


def seq_discontinuities(capture: CaptureSet, dst: MacAddr | None = None) -> int:
    """Count of adjacent packets (per destination) whose counters are not consecutive."""
    if dst is not None:
        capture = capture.for_destination(dst)
        return _breaks(capture.seq)
    return sum(_breaks(capture.seq[capture.dst == d]) for d in np.unique(capture.dst))


def _breaks(seq: np.ndarray) -> int:
    if len(seq) < 2:
        return 0
    return int(np.count_nonzero((seq[1:] - seq[:-1]) % 256 != 1))
