"""Port boundary for driving the ARC-V loop against a live system.

``run_controller`` only talks to a ``MetricsSourcePort`` and a
``LimitEnforcerPort``.  The replay-backed implementations here simulate a
single container from a trace; they are written independently of
``vscale.harness`` so the two paths can check each other.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterator, Protocol

from vscale.errors import PortError
from vscale.harness import Event, EnforcementModel, SwapModel
from vscale.policy import ArcvConfig, ArcvPolicy, Reason
from vscale.trace import MemorySample, Trace

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ack:
    limit: int
    requested_t: float
    effective_at: float | None = None  # None while the patch is still synchronising


class MetricsSourcePort(Protocol):
    target: str

    def poll(self) -> MemorySample | None:
        """Next sample, or None at end of stream.  Raises ContainerOOM if the target was killed."""


class LimitEnforcerPort(Protocol):
    def apply(self, limit: int, t: float) -> Ack: ...

    def acknowledgements(self) -> list[Ack]:
        """Acks whose patches became effective since the last call."""


class ContainerOOM(Exception):
    def __init__(self, t, usage):
        super().__init__(f"container OOM-killed at t={t}")
        self.t = t
        self.usage = usage


# replay-backed ports ----------------------------------------------------------


class ReplayContainer:
    """One simulated container: demand comes from the trace, the limit from patches."""

    def __init__(self, trace: Trace, limit: int, enforcement=EnforcementModel(), swap=SwapModel(), ack_delay=0.0):
        self.trace = trace
        self.enforcement = enforcement
        self.swap = swap
        self.ack_delay = ack_delay
        self.limit = int(limit)
        self._pending: dict | None = None
        self._done: list[Ack] = []
        self._i = 0
        self._t = (trace.t - trace.t[0]).tolist()
        self._u = trace.usage.tolist()
        self._rss = trace.rss.tolist()

    def patch(self, limit, t) -> Ack:
        ack = Ack(int(limit), t)
        self._pending = {"ack": ack, "due": t + self.enforcement.sync_delay + self.ack_delay, "waited": False}
        return ack

    def _sync(self, t, demand):
        p = self._pending
        if p is None or t < p["due"] - 1e-9:
            return
        target = p["ack"].limit
        downward_blocked = self.enforcement.downward_sync_blocks and target < self.limit and demand > target
        if downward_blocked:
            p["waited"] = True
            return
        at = t if p["waited"] else p["due"]
        self.limit = target
        self._done.append(Ack(target, p["ack"].requested_t, at))
        self._pending = None

    def next_sample(self) -> MemorySample | None:
        if self._i >= len(self._t):
            return None
        t, demand = self._t[self._i], self._u[self._i]
        self._i += 1
        self._sync(t, demand)
        over = demand - self.limit
        if over > 0:
            if not (self.swap.enabled and (self.swap.capacity is None or over <= self.swap.capacity)):
                raise ContainerOOM(t, demand)
            return MemorySample(t, self.limit, min(self._rss[self._i - 1], self.limit), over)
        return MemorySample(t, demand, self._rss[self._i - 1], 0)

    def drain(self) -> list[Ack]:
        done, self._done = self._done, []
        return done


class ReplaySource:
    def __init__(self, container: ReplayContainer, target: str | None = None):
        self.container = container
        self.target = target or container.trace.label

    def poll(self):
        return self.container.next_sample()


class ReplayEnforcer:
    def __init__(self, container: ReplayContainer):
        self.container = container

    def apply(self, limit, t) -> Ack:
        return self.container.patch(limit, t)

    def acknowledgements(self):
        return self.container.drain()


def replay_ports(trace: Trace, initial_limit: int, enforcement=EnforcementModel(), swap=SwapModel(), ack_delay=0.0):
    c = ReplayContainer(trace, initial_limit, enforcement, swap, ack_delay)
    return ReplaySource(c), ReplayEnforcer(c)


# controller loop --------------------------------------------------------------


@dataclass
class ControllerReport:
    target: str
    final_limit: int
    mode: str
    samples: int
    failed: bool = False
    events: list = field(default_factory=list)

    @property
    def limit_series(self):
        return [(e.t, e.value) for e in self.events if e.kind == "limit_enforced"]


def _retrying(what, fn, retries, backoff, sleep):
    delay = backoff
    for attempt in range(retries + 1):
        try:
            return fn()
        except PortError as exc:
            if attempt == retries:
                raise
            log.warning("%s failed (%s); retry %d/%d in %.2fs", what, exc, attempt + 1, retries, delay)
            if sleep is not None and delay > 0:
                sleep(delay)
            delay = min(delay * 2, 30.0)


def run_controller(
    source: MetricsSourcePort,
    enforcer: LimitEnforcerPort,
    cfg: ArcvConfig = ArcvConfig(),
    cadence: float = 5.0,
    initial_limit: int | None = None,
    retries: int = 3,
    backoff: float = 0.5,
    sleep=None,
    pace: bool = False,
) -> Iterator[Event]:
    """Drive the ARC-V loop; yields events and returns a ControllerReport.

    ``initial_limit`` is the limit the target was started with.  Set ``pace``
    to sleep ``cadence`` seconds between polls when driving a live source.
    """
    if not cadence > 0:
        raise ValueError("cadence must be positive")
    if initial_limit is None:
        raise ValueError("initial_limit is required")
    sleep = sleep if sleep is not None else (time.sleep if pace else None)
    policy = ArcvPolicy(cfg, int(initial_limit), cadence)
    events: list[Event] = []

    def emit(e):
        events.append(e)
        return e

    yield emit(Event(0.0, "recommend", int(initial_limit), Reason.INIT.value))
    yield emit(Event(0.0, "limit_enforced", int(initial_limit)))
    target = int(initial_limit)  # most recently requested
    enforced = int(initial_limit)
    swapping = False
    last_t = 0.0
    n = 0
    target_name = getattr(source, "target", "")
    while True:
        try:
            sample = _retrying("poll", source.poll, retries, backoff, sleep)
        except ContainerOOM as oom:
            for ack in _retrying("acknowledgements", enforcer.acknowledgements, retries, backoff, sleep):
                enforced = ack.limit
                yield emit(Event(ack.effective_at, "limit_enforced", ack.limit))
            yield emit(Event(oom.t, "oom", int(oom.usage)))
            yield emit(Event(oom.t, "end", enforced, policy.state.mode.value))
            return ControllerReport(target_name, enforced, policy.state.mode.value, n, True, events)
        if sample is None:
            break
        n += 1
        t = sample.t
        last_t = t
        for ack in _retrying("acknowledgements", enforcer.acknowledgements, retries, backoff, sleep):
            enforced = ack.limit
            yield emit(Event(ack.effective_at, "limit_enforced", ack.limit))
        if sample.swap > 0 and not swapping:
            yield emit(Event(t, "swap_spill", int(sample.swap)))
        elif sample.swap == 0 and swapping:
            yield emit(Event(t, "swap_cleared", 0))
        swapping = sample.swap > 0
        decision = policy.step(t, sample.usage, sample.swap)
        if decision is not None:
            if decision.after is not decision.before:
                yield emit(Event(t, "state", decision.after.value, decision.signal.value))
            rec = decision.recommendation
            yield emit(Event(t, "recommend", rec.limit, rec.reason.value))
            if rec.limit != target:
                _retrying("apply", lambda: enforcer.apply(rec.limit, t), retries, backoff, sleep)
                target = rec.limit
                yield emit(Event(t, "limit_requested", rec.limit))
        if sleep is not None and pace:
            sleep(cadence)
    yield emit(Event(last_t, "end", enforced, policy.state.mode.value))
    return ControllerReport(target_name, enforced, policy.state.mode.value, n, False, events)


def drive(gen) -> ControllerReport:
    """Exhaust a run_controller generator and return its report."""
    while True:
        try:
            next(gen)
        except StopIteration as stop:
            return stop.value
