import numpy as np
import pytest

from cia_ids.camera import default_spec, generate_stream
from cia_ids.capture import CaptureMeta, CaptureSet
from cia_ids.packet import MacAddr
from cia_ids.switch import apply_interference, default_plan

CAM = MacAddr.parse("02:00:00:00:0c:01")
DISPLAY = MacAddr.parse("02:00:00:00:0d:01")


def capture_from_lengths(lengths, label=0, start_ts=0):
    n = len(lengths)
    return CaptureSet(
        np.arange(start_ts, start_ts + n), np.full(n, int(CAM), dtype=np.uint64),
        np.full(n, int(DISPLAY), dtype=np.uint64), np.arange(n) % 256, lengths,
        np.zeros(n), np.full(n, label), ("front",),
        CaptureMeta(label_class="interference" if label else "normal"),
    )


@pytest.fixture(scope="session")
def benign_60s():
    return generate_stream(default_spec(60.0, seed=11))


@pytest.fixture(scope="session")
def interfered_60s(benign_60s):
    return apply_interference(benign_60s, default_plan(0.0, 60.0), rng_seed=5)


# one summary line per acceptance criterion

_criteria = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for name, value in report.user_properties:
        if name == "criterion":
            _criteria.append((value, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _criteria:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}")
