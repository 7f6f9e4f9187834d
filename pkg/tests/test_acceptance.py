"""Acceptance suite: one test per primary criterion.

Each test tags itself with a ``criterion`` property; conftest prints a
PASS/FAIL line per criterion at the end of the run.
"""

import math

import numpy as np
import pytest

from cia_ids.camera import FRONT_DISPLAY, LEFT_CAMERA, default_spec, derive_left_profile, \
    generate_stream
from cia_ids.capture import CaptureSet
from cia_ids.capture_io import export_pcap, read_csv, write_csv
from cia_ids.errors import UnknownDestinationError
from cia_ids.experiment import DEFAULT_SWEEP, ExperimentConfig, run_experiment, run_size
from cia_ids.features import bigram_histogram
from cia_ids.gru import (PARAM_NAMES, TrainConfig, cell_step, forward_batch, init_params,
                         load_model, loss_and_gradients, save_model, zeros)
from cia_ids.packet import MacAddr, PayloadUnit, fragment_unit, packetize, reassemble
from cia_ids.switch import (AttackPlan, ForwardingTable, apply_interference, default_plan, poison,
                            seq_discontinuities)
from test_gru import max_rel_error, numeric_grads
from test_metrics import mann_whitney


def _report(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.mark.slow
def test_end_to_end_detection(record_property):
    name = "end-to-end detection (W=255, AUC >= 0.97, TPR >= 0.95)"
    record_property("criterion", name)
    benign = generate_stream(default_spec(120.0, seed=101))
    drive = generate_stream(default_spec(120.0, seed=102))
    attack = apply_interference(drive, default_plan(0.0, 120.0), rng_seed=103)
    res = run_size([benign, attack], 255, TrainConfig())
    r = res.report
    ok = r.auc >= 0.97 and r.tpr >= 0.95
    _report(name, ok, f"packets={len(benign) + len(attack)} test_windows={r.total} "
                      f"auc={r.auc:.5f} tpr={r.tpr:.5f} acc={r.accuracy:.5f}")
    assert r.auc >= 0.97
    assert r.tpr >= 0.95


def test_gradient_correctness(record_property):
    name = "gradient check (central differences, rel err <= 1e-4)"
    record_property("criterion", name)
    worst = 0.0
    for seed, H, T in [(11, 8, 16), (12, 5, 10), (13, 2, 16), (14, 8, 3)]:
        rng = np.random.default_rng(seed)
        p = init_params(H, seed=seed).map(lambda t: t * 2.0)
        X, y = rng.random((4, T)), rng.random(4)
        _, analytic = loss_and_gradients(p, X, y)
        worst = max(worst, max_rel_error(analytic, numeric_grads(p, X, y, eps=1e-5)))
    _report(name, worst <= 1e-4, f"worst={worst:.2e}")
    assert worst <= 1e-4


def test_gru_algebra(record_property):
    name = "GRU algebra (zero net = 0.5, frozen state, open gate ranges)"
    record_property("criterion", name)
    rng = np.random.default_rng(5)
    X = rng.random((50, 40))
    scores, _ = forward_batch(zeros(16), X)
    assert np.all(scores == 0.5)

    p = init_params(8, seed=2)
    p.W_z[:] = 0.0
    p.b_z[:] = 60.0
    h = rng.uniform(-0.9, 0.9, 8)
    for x in rng.random(20):
        h_new, _ = cell_step(p, h, x)
        assert np.array_equal(h_new, h)

    for seed in range(10):
        p = init_params(32, seed=seed)
        _, cache = forward_batch(p, rng.random((8, 60)))
        assert np.all((cache.rs > 0) & (cache.rs < 1))
        assert np.all((cache.zs > 0) & (cache.zs < 1))
        assert np.all((cache.cs > -1) & (cache.cs < 1))
    _report(name, True)


SRC = MacAddr.parse("02:00:00:00:0c:01")
DST = MacAddr.parse("02:00:00:00:0d:01")


def test_fua_round_trip(record_property):
    name = "FU-A round trip (>= 1000 random pairs)"
    record_property("criterion", name)
    rng = np.random.default_rng(2024)
    pairs = set()
    while len(pairs) < 1200:
        pairs.add((int(rng.integers(1, 30_001)), int(rng.integers(1, 1461))))
    for size, max_body in sorted(pairs):
        unit = PayloadUnit(1 + size % 23, bytes(np.arange(size, dtype=np.uint8)))
        frags = fragment_unit(unit, max_body)
        assert reassemble(frags) == unit
        start = size % 256
        seqs = [pk.seq for pk in packetize(frags, SRC, DST, "front", start_seq=start)]
        assert seqs[0] == start
        assert all(b == (a + 1) % 256 for a, b in zip(seqs, seqs[1:]))
        assert reassemble(frags, seqs) == unit
    _report(name, True, f"pairs={len(pairs)}")


def test_auc_oracle(record_property):
    name = "AUC equals Mann-Whitney within 1e-9 (>= 100 sets)"
    record_property("criterion", name)
    from cia_ids.metrics import evaluate
    rng = np.random.default_rng(77)
    worst = 0.0
    for k in range(120):
        n = int(rng.integers(2, 300))
        y = rng.integers(0, 2, n)
        y[:2] = [0, 1]
        s = rng.random(n) if k % 3 else np.round(rng.random(n), 2)
        worst = max(worst, abs(evaluate(s, y).auc - mann_whitney(s, y)))
    _report(name, worst <= 1e-9, f"worst={worst:.1e}")
    assert worst <= 1e-9


def test_interference_observable(record_property, benign_60s, interfered_60s):
    name = "interference observable (seq breaks, strict 2-gram superset)"
    record_property("criterion", name)
    breaks_benign = seq_discontinuities(benign_60s, FRONT_DISPLAY)
    breaks_attack = seq_discontinuities(interfered_60s, FRONT_DISPLAY)
    kb = bigram_histogram(benign_60s, FRONT_DISPLAY).keys()
    ka = bigram_histogram(interfered_60s, FRONT_DISPLAY).keys()
    ok = breaks_benign == 0 and breaks_attack > 0 and kb < ka
    _report(name, ok, f"breaks {breaks_benign} vs {breaks_attack}, keys {len(kb)} vs {len(ka)}")
    assert breaks_benign == 0
    assert breaks_attack > 0
    assert kb < ka


def test_switch_semantics(record_property):
    name = "switch poisoning (single entry, idempotent, unknown victim)"
    record_property("criterion", name)
    other = MacAddr.parse("02:00:00:00:0e:01")
    before = ForwardingTable({FRONT_DISPLAY: 11, LEFT_CAMERA: 5, other: 2})
    plan = AttackPlan(FRONT_DISPLAY, 5, derive_left_profile(), 0.0, 1.0)
    after = poison(before, plan)
    assert {m for m in before if before[m] != after[m]} == {FRONT_DISPLAY}
    assert after[FRONT_DISPLAY] == 5 and set(after) == set(before)
    assert poison(after, plan) == after
    with pytest.raises(UnknownDestinationError):
        poison(ForwardingTable({other: 2}), plan)
    _report(name, True)


def test_format_round_trips(record_property, tmp_path, interfered_60s):
    name = "format round trips (CSV, model file, 24-byte empty pcap)"
    record_property("criterion", name)
    cap = interfered_60s.take(slice(0, 50_000))
    write_csv(cap, tmp_path / "c.csv")
    back = read_csv(tmp_path / "c.csv")
    assert back == cap and back.meta == cap.meta

    p = init_params(32, seed=4, window=255)
    p.bounds = (66.0, 1474.0)
    save_model(p, tmp_path / "m.txt")
    q = load_model(tmp_path / "m.txt")
    assert q == p and q.window == 255 and q.bounds == p.bounds
    assert all(getattr(q, n).tobytes() == getattr(p, n).tobytes() for n in PARAM_NAMES)

    export_pcap(CaptureSet.empty(), tmp_path / "e.pcap")
    size = (tmp_path / "e.pcap").stat().st_size
    _report(name, size == 24, f"empty pcap {size} bytes")
    assert size == 24


@pytest.mark.slow
def test_sweep_driver(record_property, tmp_path):
    name = "window sweep (14 rows, all fields populated)"
    record_property("criterion", name)
    benign = generate_stream(default_spec(12.0, seed=201))
    drive = generate_stream(default_spec(12.0, seed=202))
    attack = apply_interference(drive, default_plan(0.0, 12.0), rng_seed=203)
    cfg = ExperimentConfig(windows=DEFAULT_SWEEP, train=TrainConfig(epochs=2, hidden=16),
                           max_windows=600, out_dir=tmp_path)
    run_experiment(cfg, [benign, attack])
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    rows = [line.split(",") for line in lines[1:]]
    assert [int(r[0]) for r in rows] == list(DEFAULT_SWEEP)
    populated = all(len(r) == 6 and all(f and math.isfinite(float(f)) for f in r) for r in rows)
    _report(name, len(rows) == 14 and populated, f"rows={len(rows)}")
    assert len(rows) == 14
    assert populated
