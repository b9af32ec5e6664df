import numpy as np
import pytest
from hypothesis import given, strategies as st

from vscale.errors import InsufficientData
from vscale.signals import MemorySignal, Window, detect, forecast

GB, MB = 10**9, 10**6


def test_window_keeps_most_recent():
    w = Window(3)
    for v in range(6):
        w.push(v)
    assert w.values == (3, 4, 5)


@pytest.mark.parametrize("values, expected", [
    ([10 * GB, 11 * GB, 12 * GB], MemorySignal.SIGNAL_I),
    ([12 * GB, 10 * GB, 11 * GB], MemorySignal.SIGNAL_II),
    ([100 * MB, 101 * MB, 100 * MB], MemorySignal.NO_SIGNAL),
])
def test_detect_examples(values, expected):
    assert detect(Window(6, values)) is expected


def test_detect_needs_two_values():
    with pytest.raises(InsufficientData):
        detect([5])


@given(st.lists(st.integers(1, 10**12), min_size=2, max_size=10, unique=True))
def test_strictly_increasing_is_signal_i(values):
    assert detect(sorted(values), stability=0) is MemorySignal.SIGNAL_I


@given(st.lists(st.integers(1, 10**9), min_size=2, max_size=10), st.integers(0, 8), st.floats(0.03, 0.9))
def test_drop_beyond_band_is_signal_ii(values, at, drop):
    at = at % (len(values) - 1)
    values = list(values)
    values[at + 1] = int(values[at] * (1 - drop))
    if values[at + 1] < values[at] * 0.98:
        assert detect(values) is MemorySignal.SIGNAL_II


@given(st.lists(st.integers(1, 10**6), min_size=2, max_size=10), st.integers(2, 1000))
def test_detect_scale_invariant(values, k):
    assert detect(values) is detect([v * k for v in values])


def test_forecast_examples():
    assert forecast([100, 110, 120], 60, 5) == pytest.approx(240)
    assert forecast([50, 50, 50], 17, 5) == 50
    assert forecast([0, 10], 10, 5) == pytest.approx(30)


def test_forecast_never_below_last_value():
    assert forecast([120, 110, 100], 60, 5) == 100


@given(st.floats(-1e6, 1e6), st.floats(0, 1e7), st.integers(2, 12), st.floats(1, 120))
def test_forecast_reproduces_lines(slope, intercept, n, horizon):
    x = np.arange(n) * 5.0
    y = intercept + slope * x
    expected = max(intercept + slope * (x[-1] + horizon), y[-1])
    assert forecast(list(y), horizon, 5.0) == pytest.approx(expected, rel=1e-9, abs=1e-6)


@given(st.lists(st.floats(0, 1e12), min_size=2, max_size=12), st.floats(1, 300))
def test_forecast_matches_polyfit(values, horizon):
    x = np.arange(len(values)) * 5.0
    slope, icpt = np.polyfit(x, values, 1)
    expected = max(icpt + slope * (x[-1] + horizon), values[-1])
    assert forecast(values, horizon, 5.0) == pytest.approx(expected, rel=1e-7, abs=1e-3)
