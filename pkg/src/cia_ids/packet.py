"""Wire-level types and FU-A style fragmentation.

Packet lengths follow a fixed stack: Ethernet (14) + IPv4 (20) + UDP (8)
plus a 12-byte application header that carries the stream id, the 8-bit
sequence counter and the two FU bytes. A full fragment body of 1420 bytes
therefore produces a 1474-byte frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import InvalidArgumentError, MalformedStreamError

ETH_HEADER = 14
IPV4_HEADER = 20
UDP_HEADER = 8
NETWORK_OVERHEAD = ETH_HEADER + IPV4_HEADER + UDP_HEADER  # 42
APP_HEADER = 12
HEADER_OVERHEAD = NETWORK_OVERHEAD + APP_HEADER  # 54
MAX_FRAME = 1514
DEFAULT_MAX_BODY = 1420

FU_A_TYPE = 28
START_BIT = 0x80
END_BIT = 0x40
TYPE_MASK = 0x1F


@dataclass(frozen=True, order=True)
class MacAddr:
    octets: bytes

    def __post_init__(self):
        if not isinstance(self.octets, (bytes, bytearray)) or len(self.octets) != 6:
            raise InvalidArgumentError(f"MAC address needs 6 octets, got {self.octets!r}")
        object.__setattr__(self, "octets", bytes(self.octets))

    @classmethod
    def parse(cls, text: str) -> "MacAddr":
        parts = text.strip().split(":")
        if len(parts) != 6 or any(len(p) != 2 for p in parts):
            raise InvalidArgumentError(f"bad MAC address {text!r}")
        try:
            return cls(bytes(int(p, 16) for p in parts))
        except ValueError:
            raise InvalidArgumentError(f"bad MAC address {text!r}") from None

    @classmethod
    def from_int(cls, value: int) -> "MacAddr":
        return cls(int(value).to_bytes(6, "big"))

    def __int__(self):
        return int.from_bytes(self.octets, "big")

    def __str__(self):
        return ":".join(f"{b:02x}" for b in self.octets)

    def __repr__(self):
        return f"MacAddr('{self}')"


@dataclass(frozen=True)
class PayloadUnit:
    """One coded-video unit (a slice) before fragmentation."""

    unit_type: int
    data: bytes

    def __post_init__(self):
        if not 1 <= self.unit_type <= 23:
            raise InvalidArgumentError(f"unit_type must be in 1..23, got {self.unit_type}")
        if len(self.data) < 1:
            raise InvalidArgumentError("payload unit must carry at least one byte")


@dataclass(frozen=True)
class Fragment:
    """A piece of a payload unit as carried in one packet.

    For FU-A fragments ``indicator`` is the FU indicator and ``header`` the
    FU header (start bit, end bit, original unit type). An unfragmented
    unit has ``header=None`` and its own unit header in ``indicator``.
    """

    indicator: int
    header: int | None
    body: bytes

    @property
    def fragmented(self) -> bool:
        return self.header is not None

    @property
    def start(self) -> bool:
        return self.header is not None and bool(self.header & START_BIT)

    @property
    def end(self) -> bool:
        return self.header is not None and bool(self.header & END_BIT)

    @property
    def unit_type(self) -> int:
        if self.header is None:
            return self.indicator & TYPE_MASK
        return self.header & TYPE_MASK


@dataclass(frozen=True)
class Packet:
    timestamp_us: int
    src: MacAddr
    dst: MacAddr
    seq: int
    length: int
    source_id: str
    label: int = 0

    def __post_init__(self):
        if not 0 <= self.seq <= 255:
            raise InvalidArgumentError(f"seq must be in 0..255, got {self.seq}")
        if not HEADER_OVERHEAD <= self.length <= MAX_FRAME:
            raise InvalidArgumentError(
                f"length must be in {HEADER_OVERHEAD}..{MAX_FRAME}, got {self.length}")
        if self.label not in (0, 1):
            raise InvalidArgumentError(f"label must be 0 or 1, got {self.label}")


def fragment_count(size: int, max_body: int) -> int:
    """Number of packets a unit of ``size`` bytes occupies."""
    return max(1, -(-size // max_body))


def fragment_unit(unit: PayloadUnit, max_body: int = DEFAULT_MAX_BODY) -> list[Fragment]:
    if max_body < 1:
        raise InvalidArgumentError(f"max_body must be >= 1, got {max_body}")
    # NRI bits fixed at 0b11 for reference units, 0b10 otherwise
    nri = 0x60 if unit.unit_type == 5 else 0x40
    data = unit.data
    if len(data) <= max_body:
        return [Fragment(nri | unit.unit_type, None, data)]

    indicator = nri | FU_A_TYPE
    frags = []
    last = len(data) - 1
    for off in range(0, len(data), max_body):
        hdr = unit.unit_type
        if off == 0:
            hdr |= START_BIT
        if off + max_body > last:
            hdr |= END_BIT
        frags.append(Fragment(indicator, hdr, data[off:off + max_body]))
    return frags


def reassemble(fragments: Sequence[Fragment], seqs: Sequence[int] | None = None) -> PayloadUnit:
    """Inverse of :func:`fragment_unit`.

    ``seqs``, when given, are the sequence counters of the carrying packets;
    a jump between consecutive counters is reported as a gap.
    """
    if not fragments:
        raise MalformedStreamError("empty fragment list", 0)
    if seqs is not None:
        if len(seqs) != len(fragments):
            raise InvalidArgumentError("seqs and fragments differ in length")
        for i in range(1, len(seqs)):
            if seqs[i] != (seqs[i - 1] + 1) % 256:
                raise MalformedStreamError("sequence gap", i)

    first = fragments[0]
    if not first.fragmented:
        if len(fragments) != 1:
            raise MalformedStreamError("unfragmented unit followed by extra fragments", 1)
        return PayloadUnit(first.unit_type, first.body)

    utype = first.unit_type
    if not first.start:
        raise MalformedStreamError("first fragment lacks start bit", 0)
    for i, frag in enumerate(fragments):
        if not frag.fragmented:
            raise MalformedStreamError("unfragmented unit inside FU-A sequence", i)
        if frag.unit_type != utype:
            raise MalformedStreamError("mixed unit types", i)
        if i > 0 and frag.start:
            raise MalformedStreamError("unexpected start bit", i)
        is_last = i == len(fragments) - 1
        if frag.end and not is_last:
            raise MalformedStreamError("end bit before final fragment", i)
        if is_last and not frag.end:
            raise MalformedStreamError("final fragment lacks end bit", i)
        if len(frag.body) < 1:
            raise MalformedStreamError("empty fragment body", i)
    return PayloadUnit(utype, b"".join(f.body for f in fragments))


def packetize(
    fragments: Iterable[Fragment],
    src: MacAddr,
    dst: MacAddr,
    source_id: str,
    start_seq: int = 0,
    clock: Callable[[int], int] | None = None,
    label: int = 0,
    overhead: int = HEADER_OVERHEAD,
) -> list[Packet]:
    """Wrap fragments into packets with a running 8-bit counter.

    ``clock(k)`` gives the timestamp of the k-th packet; it must not go
    backwards.
    """
    if not 0 <= start_seq <= 255:
        raise InvalidArgumentError(f"start_seq must be in 0..255, got {start_seq}")
    packets: list[Packet] = []
    prev_ts = None
    for k, frag in enumerate(fragments):
        ts = 0 if clock is None else int(clock(k))
        if prev_ts is not None and ts < prev_ts:
            raise InvalidArgumentError(f"clock went backwards at packet {k}")
        prev_ts = ts
        packets.append(Packet(ts, src, dst, (start_seq + k) % 256,
                              overhead + len(frag.body), source_id, label))
    return packets
