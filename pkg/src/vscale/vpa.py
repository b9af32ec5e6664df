"""Simulated Kubernetes VPA: static recommendation, restart-from-zero on OOM.

The recommendation never changes during an attempt.  The first sample whose
usage is strictly above it kills the attempt; the application restarts from
the beginning of the trace with 1.2x the usage observed just before the
failure.  There is no checkpointing, so every failed attempt's progress is
lost wall-clock time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from vscale.errors import ValidationError
from vscale.trace import Trace, duration

OOM_BUMP = 1.2
MAX_ATTEMPTS = 10_000


@dataclass(frozen=True)
class Attempt:
    recommendation: int
    progress: float  # seconds from trace start reached before the OOM (full duration if it succeeded)
    oom_t: float | None = None  # trace time of the sample that exceeded the recommendation
    oom_usage: int | None = None


@dataclass
class VpaRunState:
    recommendation: int
    restarts: int = 0
    wall_clock: float = 0.0
    attempt_log: list = field(default_factory=list)
    exceeds_node: bool = False

    @property
    def recommendations(self) -> list[int]:
        return [a.recommendation for a in self.attempt_log]


def _bump(value) -> int:
    return round(value * OOM_BUMP)


def default_initial_recommendation(trace: Trace) -> int:
    return _bump(int(trace.usage[0]))


def vpa_replay(trace: Trace, initial_recommendation=None, node_memory=None) -> VpaRunState:
    if initial_recommendation is None:
        initial_recommendation = default_initial_recommendation(trace)
    if not initial_recommendation > 0:
        raise ValidationError(f"initial recommendation must be positive, got {initial_recommendation}")
    t = trace.t - trace.t[0]
    usage = trace.usage
    rec = int(round(initial_recommendation))
    run = VpaRunState(recommendation=rec)
    for _ in range(MAX_ATTEMPTS):
        over = usage > rec
        if not over.any():
            run.attempt_log.append(Attempt(rec, duration(trace)))
            run.wall_clock += duration(trace)
            break
        i = int(np.argmax(over))
        if i == 0:
            base, progress = rec, 0.0
        else:
            base, progress = int(usage[i - 1]), float(t[i - 1])
        run.attempt_log.append(Attempt(rec, progress, float(t[i]), int(usage[i])))
        run.wall_clock += progress
        new = _bump(base)
        if new <= rec:
            # a jump past the limit from far below it: bump the request itself
            new = max(_bump(rec), rec + 1)
        rec = new
    else:
        raise RuntimeError("VPA replay did not converge")
    run.recommendation = rec
    run.restarts = len(run.attempt_log) - 1
    run.exceeds_node = node_memory is not None and rec > node_memory
    return run


def vpa_footprint(run: VpaRunState, trace: Trace | None = None) -> float:
    """Byte-seconds provisioned across all attempts (recommendation x elapsed time)."""
    return float(sum(a.recommendation * a.progress for a in run.attempt_log))
