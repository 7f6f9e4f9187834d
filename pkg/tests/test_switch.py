import numpy as np
import pytest

from cia_ids.camera import FRONT_DISPLAY, LEFT_CAMERA, derive_left_profile
from cia_ids.errors import InvalidArgumentError, UnknownDestinationError
from cia_ids.features import bigram_histogram
from cia_ids.packet import MacAddr
from cia_ids.switch import (AttackPlan, ForwardingTable, apply_interference, default_plan,
                            learn, poison, seq_discontinuities)

A = MacAddr.parse("02:00:00:00:00:0a")
B = MacAddr.parse("02:00:00:00:00:0b")
C = MacAddr.parse("02:00:00:00:00:0c")


def plan(victim=FRONT_DISPLAY, port=5, start=0.0, end=1.0):
    return AttackPlan(victim, port, derive_left_profile(), start, end)


def test_learn_insert_replace_independent():
    t = learn(ForwardingTable(), A, 11)
    assert dict(t) == {A: 11}
    assert dict(learn(t, A, 5)) == {A: 5}
    t2 = learn(learn(t, B, 3), C, 7)
    assert dict(t2) == {A: 11, B: 3, C: 7}
    assert dict(t) == {A: 11}          # input untouched


def test_learn_rejects_bad_port():
    with pytest.raises(InvalidArgumentError):
        learn(ForwardingTable(), A, 0)


def test_poison_redirects_display_port():
    before = ForwardingTable({FRONT_DISPLAY: 11, A: 2, B: 3})
    after = poison(before, plan())
    assert after[FRONT_DISPLAY] == 5
    changed = {m for m in before if before[m] != after[m]}
    assert changed == {FRONT_DISPLAY}
    assert set(before) == set(after)


def test_poison_idempotent():
    t = ForwardingTable({FRONT_DISPLAY: 11})
    once = poison(t, plan())
    assert poison(once, plan()) == once
    assert dict(once) == {FRONT_DISPLAY: 5}


def test_poison_unknown_victim():
    with pytest.raises(UnknownDestinationError):
        poison(ForwardingTable({A: 1}), plan())


def test_table_dump_golden():
    t = poison(ForwardingTable({FRONT_DISPLAY: 11, LEFT_CAMERA: 4}), plan())
    text = t.dump()
    assert text == "02:00:00:00:0c:02 4\n02:00:00:00:0d:01 5\n"
    assert ForwardingTable.parse(text) == t


def test_plan_validation():
    with pytest.raises(InvalidArgumentError):
        plan(start=2.0, end=1.0)
    with pytest.raises(InvalidArgumentError):
        plan(start=-1.0, end=1.0)


def test_interference_merge_counts(benign_60s, interfered_60s):
    injected = interfered_60s.source_ids() == "left"
    assert len(interfered_60s) == len(benign_60s) + int(injected.sum())
    assert injected.sum() > 0
    assert np.all(np.diff(interfered_60s.timestamp_us) >= 0)
    assert np.all(interfered_60s.label == 1)
    assert interfered_60s.meta.label_class == "interference"
    # benign rows survive unchanged and in order
    front = interfered_60s.take(~injected)
    assert np.array_equal(front.length, benign_60s.length)
    assert np.array_equal(front.timestamp_us, benign_60s.timestamp_us)
    # injected rows are addressed to the victim
    assert np.all(interfered_60s.dst[injected] == np.uint64(int(FRONT_DISPLAY)))


def test_ties_put_benign_first(benign_60s, interfered_60s):
    ts, src = interfered_60s.timestamp_us, interfered_60s.source_ids()
    tie = np.nonzero(ts[1:] == ts[:-1])[0]
    tie = tie[src[tie] != src[tie + 1]]
    assert len(tie) > 0
    assert np.all(src[tie] == "front")


def test_window_only_touches_its_interval(benign_60s):
    out = apply_interference(benign_60s, default_plan(10.0, 20.0), 3)
    ts = out.timestamp_us
    injected = out.source_ids() == "left"
    assert ts[injected].min() >= 10_000_000 and ts[injected].max() < 20_000_000
    outside = (ts < 10_000_000) | (ts >= 20_000_000)
    # front camera continuity is intact on both sides of the window
    for part in (ts < 10_000_000, ts >= 20_000_000):
        assert seq_discontinuities(out.take(part & ~injected)) == 0
        assert seq_discontinuities(out.take(part)) == 0
    inside = out.take(~outside)
    assert seq_discontinuities(inside, FRONT_DISPLAY) > 0
    assert np.all(out.label[outside] == 1)


def test_scan_oracle_counts_breaks():
    # hand-made stream: two interleaved counters
    from conftest import capture_from_lengths
    cap = capture_from_lengths([100] * 6)
    cap.seq[:] = [0, 1, 2, 3, 4, 5]
    assert seq_discontinuities(cap) == 0
    cap.seq[:] = [0, 7, 1, 8, 2, 9]
    assert seq_discontinuities(cap) == 5
    cap.seq[:] = [254, 255, 0, 1, 2, 3]
    assert seq_discontinuities(cap) == 0


def test_window_beyond_capture(benign_60s):
    with pytest.raises(InvalidArgumentError):
        apply_interference(benign_60s, default_plan(50.0, 61.0), 0)


def test_requires_normal_input(interfered_60s):
    with pytest.raises(InvalidArgumentError):
        apply_interference(interfered_60s, default_plan(0.0, 1.0), 0)


def test_interference_deterministic(benign_60s):
    a = apply_interference(benign_60s, default_plan(0.0, 5.0), 8)
    b = apply_interference(benign_60s, default_plan(0.0, 5.0), 8)
    assert a == b


def test_bigram_support_grows(benign_60s, interfered_60s):
    assert len(benign_60s) >= 100_000
    benign_keys = bigram_histogram(benign_60s, FRONT_DISPLAY).keys()
    mixed_keys = bigram_histogram(interfered_60s, FRONT_DISPLAY).keys()
    assert benign_keys < mixed_keys
