"""Window-level memory alerts and the short-horizon growth forecast."""

from __future__ import annotations

from collections import deque
from enum import Enum
from typing import Sequence

import numpy as np

from vscale.errors import InsufficientData

DEFAULT_CAPACITY = 6
DEFAULT_STABILITY = 0.02


class MemorySignal(str, Enum):
    SIGNAL_I = "SignalI"  # increase
    SIGNAL_II = "SignalII"  # possible decrease
    NO_SIGNAL = "NoSignal"


class Window:
    """Bounded FIFO of the most recent usage samples (most recent last)."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY, values: Sequence[float] = ()):
        if capacity < 1:
            raise ValueError("window capacity must be positive")
        self.capacity = capacity
        self._values = deque(values, maxlen=capacity)

    def push(self, value):
        self._values.append(value)

    @property
    def values(self) -> tuple:
        return tuple(self._values)

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        return f"Window(capacity={self.capacity}, values={list(self._values)})"


def _as_values(window) -> list:
    values = list(window.values) if isinstance(window, Window) else list(window)
    if len(values) < 2:
        raise InsufficientData(f"need at least 2 window values, got {len(values)}")
    return values


def detect(window, stability: float = DEFAULT_STABILITY) -> MemorySignal:
    """Classify a window by sortedness, with each value compared to its predecessor.

    All neighbours within ``stability`` of each other -> no signal; sorted
    ascending up to the band -> signal I; anything else -> signal II.
    """
    values = _as_values(window)
    pairs = list(zip(values, values[1:]))
    if all(abs(b - a) <= stability * a for a, b in pairs):
        return MemorySignal.NO_SIGNAL
    if all(b >= a * (1.0 - stability) for a, b in pairs):
        return MemorySignal.SIGNAL_I
    return MemorySignal.SIGNAL_II


def forecast(window, horizon: float, sample_interval: float) -> float:
    """OLS line over the window, evaluated ``horizon`` seconds past its last point.

    Never returns less than the last observed value.
    """
    values = np.asarray(_as_values(window), dtype=np.float64)
    if not horizon > 0:
        raise ValueError("forecast horizon must be positive")
    x = np.arange(len(values), dtype=np.float64) * sample_interval
    xm, ym = x.mean(), values.mean()
    dx = x - xm
    slope = float(np.dot(dx, values - ym) / np.dot(dx, dx))
    predicted = ym + slope * (x[-1] + horizon - xm)
    return max(float(predicted), float(values[-1]))
