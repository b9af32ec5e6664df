import numpy as np
import pytest

from vscale.trace import Trace

MB = 10**6
GB = 10**9


def make_trace(t, usage, label="t", interval=None):
    t = np.asarray(t, dtype=float)
    usage = np.asarray(usage, dtype=np.int64)
    if interval is None:
        interval = float((t[-1] - t[0]) / (len(t) - 1))
    return Trace(t, usage, np.zeros_like(usage), np.zeros_like(usage), interval, label)


def brute_force_vpa(times, usage, rec):
    """Independent re-statement of the restart rules over plain lists."""
    recs, wall, area = [], 0.0, 0.0
    t0 = times[0]
    while True:
        recs.append(rec)
        failed_at = None
        for i, u in enumerate(usage):
            if u > rec:
                failed_at = i
                break
        if failed_at is None:
            wall += times[-1] - t0
            area += rec * (times[-1] - t0)
            return recs, wall, area
        if failed_at == 0:
            base, reached = rec, 0.0
        else:
            base, reached = usage[failed_at - 1], times[failed_at - 1] - t0
        wall += reached
        area += rec * reached
        nxt = round(base * 1.2)
        rec = nxt if nxt > rec else max(round(rec * 1.2), rec + 1)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def ramp_100mb():
    """0 -> 100 MB over 100 s on a 0.1 s grid (usage = t MB exactly)."""
    k = np.arange(1001)
    return make_trace(np.linspace(0, 100, 1001), k * 100_000, label="ramp")
