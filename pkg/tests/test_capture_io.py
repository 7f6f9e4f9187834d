import struct

import numpy as np
import pytest

from cia_ids.capture import CaptureSet
from cia_ids.capture_io import CSV_HEADER, export_pcap, meta_path, read_csv, write_csv
from cia_ids.errors import CaptureParseError, CaptureValidationError
from conftest import capture_from_lengths


def test_empty_capture_is_header_only(tmp_path):
    p = tmp_path / "e.csv"
    write_csv(CaptureSet.empty(), p)
    assert p.read_text() == CSV_HEADER + "\n"
    assert read_csv(p) == CaptureSet.empty()


def test_three_packets_four_lines(tmp_path):
    p = tmp_path / "c.csv"
    write_csv(capture_from_lengths([576, 1474, 160]), p)
    lines = p.read_bytes().split(b"\n")
    assert lines[-1] == b""
    assert len(lines) - 1 == 4
    assert lines[0].decode() == "timestamp_us,src,dst,seq,length,source_id,label"
    assert lines[1].decode() == "0,02:00:00:00:0c:01,02:00:00:00:0d:01,0,576,front,0"


def test_generated_roundtrip(tmp_path, interfered_60s):
    cap = interfered_60s.take(slice(0, 20_000))
    p = tmp_path / "g.csv"
    write_csv(cap, p)
    back = read_csv(p)
    assert back == cap
    assert back.meta == cap.meta


def test_meta_inferred_without_sidecar(tmp_path):
    p = tmp_path / "x.csv"
    write_csv(capture_from_lengths([100, 200], label=1), p, with_meta=False)
    assert not meta_path(p).exists()
    assert read_csv(p).meta.label_class == "interference"


def _write_rows(path, rows):
    path.write_text(CSV_HEADER + "\n" + "".join(r + "\n" for r in rows))


def test_seq_out_of_range_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    _write_rows(p, ["0,02:00:00:00:0c:01,02:00:00:00:0d:01,1,100,front,0",
                    "1,02:00:00:00:0c:01,02:00:00:00:0d:01,256,100,front,0"])
    with pytest.raises(CaptureParseError) as exc:
        read_csv(p)
    assert exc.value.line == 3
    assert ":3:" in str(exc.value)


@pytest.mark.parametrize("row", [
    "0,02:00:00:00:0c:01,02:00:00:00:0d:01,1,100,front",
    "0,02:00:00:00:0c:01,02:00:00:00:0d:01,1,100,front,7",
    "0,nothex,02:00:00:00:0d:01,1,100,front,0",
    "0,02:00:00:00:0c:01,02:00:00:00:0d:01,1,9999,front,0",
    "x,02:00:00:00:0c:01,02:00:00:00:0d:01,1,100,front,0",
])
def test_malformed_rows(tmp_path, row):
    p = tmp_path / "bad.csv"
    _write_rows(p, [row])
    with pytest.raises(CaptureParseError) as exc:
        read_csv(p)
    assert exc.value.line == 2


def test_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("ts,len\n")
    with pytest.raises(CaptureParseError):
        read_csv(p)


def test_out_of_order_timestamps(tmp_path):
    p = tmp_path / "bad.csv"
    _write_rows(p, ["5,02:00:00:00:0c:01,02:00:00:00:0d:01,1,100,front,0",
                    "4,02:00:00:00:0c:01,02:00:00:00:0d:01,2,100,front,0"])
    with pytest.raises(CaptureValidationError):
        read_csv(p)


def test_write_to_missing_dir(tmp_path):
    with pytest.raises(OSError) as exc:
        write_csv(capture_from_lengths([100]), tmp_path / "nope" / "c.csv")
    assert "nope" in str(exc.value)


def test_empty_pcap_is_24_bytes(tmp_path):
    p = tmp_path / "e.pcap"
    export_pcap(CaptureSet.empty(), p)
    data = p.read_bytes()
    assert len(data) == 24
    magic, major, minor, _, _, snap, link = struct.unpack("<IHHiIII", data)
    assert (magic, major, minor, link) == (0xA1B2C3D4, 2, 4, 1)
    assert data[:4] == bytes.fromhex("d4c3b2a1")


def test_pcap_record_lengths(tmp_path):
    cap = capture_from_lengths([1474, 60, 576])
    cap.timestamp_us[:] = [1_500_000, 2_000_001, 2_000_002]
    p = tmp_path / "c.pcap"
    export_pcap(cap, p)
    data = p.read_bytes()
    off, seen = 24, []
    while off < len(data):
        sec, usec, incl, orig = struct.unpack_from("<IIII", data, off)
        seen.append((sec, usec, incl, orig))
        off += 16 + incl
    assert off == len(data)
    assert seen[0] == (1, 500_000, 1474, 1474)
    assert [s[2] for s in seen] == [1474, 60, 576]
    assert sum(s[2] for s in seen) == cap.total_bytes


def test_pcap_parses_with_dpkt(tmp_path, interfered_60s):
    dpkt = pytest.importorskip("dpkt")
    cap = interfered_60s.take(slice(0, 3000))
    p = tmp_path / "g.pcap"
    export_pcap(cap, p)
    n = 0
    with open(p, "rb") as fh:
        for (ts, buf), length, seq in zip(dpkt.pcap.Reader(fh), cap.length, cap.seq):
            eth = dpkt.ethernet.Ethernet(buf)
            ip = eth.data
            assert isinstance(ip, dpkt.ip.IP)
            udp = ip.data
            assert isinstance(udp, dpkt.udp.UDP)
            assert len(buf) == length
            assert ip.len == length - 14
            assert udp.ulen == length - 34
            assert len(udp.data) == length - 42
            assert udp.data[2] == seq
            # checksum recomputation agrees with ours
            raw = bytes(buf[14:34])
            ip2 = dpkt.ip.IP(raw + bytes(ip.data))
            ip2.sum = 0
            assert dpkt.ip.IP(bytes(ip2)).sum == ip.sum
            n += 1
    assert n == len(cap)
