"""Offline Growth/Dynamic classification of a complete trace."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from vscale.trace import Trace

DEFAULT_BAND = 0.02


class Pattern(str, Enum):
    GROWTH = "Growth"
    DYNAMIC = "Dynamic"

    @property
    def short(self) -> str:
        return self.value[0]


@dataclass(frozen=True)
class PatternLabel:
    label: Pattern
    violation_index: int | None = None

    def __post_init__(self):
        if (self.label is Pattern.DYNAMIC) != (self.violation_index is not None):
            raise ValueError("violation_index must be set exactly when the label is Dynamic")


def classify(trace: Trace, band: float = DEFAULT_BAND) -> PatternLabel:
    """Growth iff no sample falls more than ``band`` below its predecessor.

    Increases of any size pass; only the lower side of the band gates.
    ``violation_index`` is the index of the first offending sample.
    """
    if not 0 <= band < 1:
        raise ValueError(f"band must be in [0, 1), got {band}")
    u = trace.usage.astype(np.float64)
    bad = u[1:] < u[:-1] * (1.0 - band)
    if not bad.any():
        return PatternLabel(Pattern.GROWTH)
    return PatternLabel(Pattern.DYNAMIC, int(np.argmax(bad)) + 1)
