"""CSV persistence and pcap export for captures.

The CSV file holds packet rows only. Capture metadata (label class, seed,
spec digest, duration) goes to a JSON sidecar next to it, ``<path>.meta.json``;
when the sidecar is missing the label class is inferred from the rows.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .capture import CaptureMeta, CaptureSet, INTERFERENCE, NORMAL
from .errors import CaptureParseError, CaptureValidationError
from .packet import ETH_HEADER, HEADER_OVERHEAD, IPV4_HEADER, MAX_FRAME, MacAddr

CSV_HEADER = "timestamp_us,src,dst,seq,length,source_id,label"

PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_ETHERNET = 1
PCAP_GLOBAL = struct.Struct("<IHHiIII")
PCAP_RECORD = struct.Struct("<IIII")
UDP_PORT = 5004
_FILLER = bytes(i & 0xFF for i in range(256 + MAX_FRAME))


def meta_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def write_csv(capture: CaptureSet, path, with_meta: bool = True) -> None:
    path = Path(path)
    macs = {int(v): str(MacAddr.from_int(int(v)))
            for v in np.unique(np.concatenate([capture.src, capture.dst]))}
    rows = zip(capture.timestamp_us.tolist(), capture.src.tolist(), capture.dst.tolist(),
               capture.seq.tolist(), capture.length.tolist(), capture.source.tolist(),
               capture.label.tolist())
    names = capture.source_names
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            fh.writelines(f"{t},{macs[s]},{macs[d]},{q},{n},{names[c]},{y}\n"
                          for t, s, d, q, n, c, y in rows)
        if with_meta:
            meta_path(path).write_text(json.dumps(
                {"label_class": capture.meta.label_class, "seed": capture.meta.seed,
                 "spec_hash": capture.meta.spec_hash,
                 "duration_s": capture.meta.duration_s}, indent=1) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write capture: {exc.strerror}", str(path)) from exc


def _load_meta(path, labels: np.ndarray) -> CaptureMeta:
    mp = meta_path(path)
    if mp.exists():
        return CaptureMeta(**json.loads(mp.read_text()))
    cls = INTERFERENCE if len(labels) and labels[0] == 1 else NORMAL
    return CaptureMeta(label_class=cls)


def read_csv(path) -> CaptureSet:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\r\n")
        if header != CSV_HEADER:
            raise CaptureParseError(f"expected header {CSV_HEADER!r}, got {header!r}", 1, path)
        ts, src, dst, seq, length, source, label = [], [], [], [], [], [], []
        mac_cache: dict[str, int] = {}
        names: dict[str, int] = {}
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\r\n").split(",")
            if len(parts) != 7:
                raise CaptureParseError(f"expected 7 fields, got {len(parts)}", lineno, path)
            try:
                t, q, n, y = int(parts[0]), int(parts[3]), int(parts[4]), int(parts[6])
                s = mac_cache.get(parts[1])
                if s is None:
                    s = mac_cache[parts[1]] = int(MacAddr.parse(parts[1]))
                d = mac_cache.get(parts[2])
                if d is None:
                    d = mac_cache[parts[2]] = int(MacAddr.parse(parts[2]))
            except ValueError as exc:
                raise CaptureParseError(str(exc), lineno, path) from None
            if not 0 <= q <= 255:
                raise CaptureParseError(f"seq {q} outside 0..255", lineno, path)
            if not HEADER_OVERHEAD <= n <= MAX_FRAME:
                raise CaptureParseError(f"length {n} outside {HEADER_OVERHEAD}..{MAX_FRAME}",
                                        lineno, path)
            if y not in (0, 1):
                raise CaptureParseError(f"label {y} is not 0 or 1", lineno, path)
            if ts and t < ts[-1]:
                raise CaptureValidationError(
                    f"{path}:{lineno}: timestamp {t} precedes previous {ts[-1]}")
            ts.append(t)
            src.append(s)
            dst.append(d)
            seq.append(q)
            length.append(n)
            source.append(names.setdefault(parts[5], len(names)))
            label.append(y)
    labels = np.asarray(label, dtype=np.int8)
    cap = CaptureSet(ts, np.array(src, dtype=np.uint64), np.array(dst, dtype=np.uint64),
                     seq, length, source, labels, tuple(names), _load_meta(path, labels))
    return cap.validate()


def _ipv4_checksum(header: bytes) -> int:
    total = sum(struct.unpack("!10H", header))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _frame_bytes(src: int, dst: int, seq: int, length: int, stream: int, ts_us: int) -> bytes:
    eth = dst.to_bytes(6, "big") + src.to_bytes(6, "big") + b"\x08\x00"
    ip_src = bytes([10, 0, 12, src & 0xFF])
    ip_dst = bytes([10, 0, 13, dst & 0xFF])
    ip_len = length - ETH_HEADER
    ip = struct.pack("!BBHHHBBH4s4s", 0x45, 0, ip_len, seq, 0x4000, 64, 17, 0, ip_src, ip_dst)
    ip = ip[:10] + struct.pack("!H", _ipv4_checksum(ip)) + ip[12:]
    udp = struct.pack("!HHHH", UDP_PORT, UDP_PORT, ip_len - IPV4_HEADER, 0)
    # version, stream id, seq, flags, 32-bit media clock, FU indicator/header, reserved
    app = struct.pack("!BBBBIBBH", 1, stream & 0xFF, seq, 0, ts_us & 0xFFFFFFFF, 0, 0, 0)
    filler = _FILLER[seq:seq + length - HEADER_OVERHEAD]
    return eth + ip + udp + app + filler


def export_pcap(capture: CaptureSet, path) -> None:
    """Write a classic little-endian microsecond pcap with synthetic frames."""
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(PCAP_GLOBAL.pack(PCAP_MAGIC, 2, 4, 0, 0, 65535, LINKTYPE_ETHERNET))
            for t, s, d, q, n, c in zip(capture.timestamp_us.tolist(), capture.src.tolist(),
                                        capture.dst.tolist(), capture.seq.tolist(),
                                        capture.length.tolist(), capture.source.tolist()):
                frame = _frame_bytes(s, d, q, n, c, t)
                fh.write(PCAP_RECORD.pack(t // 1_000_000, t % 1_000_000, n, n))
                fh.write(frame)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write pcap: {exc.strerror}", str(path)) from exc
