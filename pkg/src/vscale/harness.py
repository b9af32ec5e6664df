"""Trace replay of a policy under an enforcement-delay and swap model.

All times in results are seconds since the start of the run (wall clock),
so a VPA run with restarts is longer than its trace.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from vscale.errors import ConfigError, SimulationError, ValidationError
from vscale.policy import ArcvConfig, ArcvPolicy, Reason, initial_limit
from vscale.trace import Trace, duration, peak
from vscale.vpa import vpa_replay

_EPS = 1e-9

REPORT_COLUMNS = ("trace", "policy", "footprint_byte_s", "exec_time_s", "restarts", "oom_events", "max_swap_bytes")
RATIO_COLUMNS = ("trace", "policy", "baseline", "footprint_ratio", "exec_time_ratio", "restarts", "baseline_restarts")


@dataclass(frozen=True)
class EnforcementModel:
    sync_delay: float = 10.0
    downward_sync_blocks: bool = True

    def __post_init__(self):
        if not self.sync_delay >= 0:
            raise ConfigError("sync_delay must be non-negative")


@dataclass(frozen=True)
class SwapModel:
    enabled: bool = True
    slowdown_factor: float = 0.0  # extra seconds per byte-second of swap held
    capacity: int | None = None  # None = unbounded

    def __post_init__(self):
        if self.slowdown_factor < 0:
            raise ConfigError("slowdown_factor must be non-negative")
        if self.capacity is not None and self.capacity < 0:
            raise ConfigError("swap capacity must be non-negative")

    def absorbs(self, spill) -> bool:
        return self.enabled and (self.capacity is None or spill <= self.capacity)


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    value: float | int | str
    note: str = ""


# policy selections ------------------------------------------------------------


@dataclass(frozen=True)
class ArcvSpec:
    cfg: ArcvConfig = ArcvConfig()
    initial_limit: int | None = None  # overrides expected_peak * initial_limit_factor
    expected_peak: int | None = None  # defaults to the trace peak
    name: str = "arcv"


@dataclass(frozen=True)
class VpaSpec:
    initial_recommendation: int | None = None  # defaults to 1.2 x first sample
    name: str = "vpa"


@dataclass(frozen=True)
class StaticSpec:
    limit: int
    name: str = "static"

    def __post_init__(self):
        if not self.limit > 0:
            raise ConfigError(f"static limit must be positive, got {self.limit}")


def make_policy(name: str, **params):
    key = name.lower()
    if key == "arcv":
        return ArcvSpec(**params)
    if key in ("vpa", "vpa-sim"):
        return VpaSpec(**params)
    if key == "static":
        return StaticSpec(**params)
    raise ConfigError(f"unknown policy {name!r} (expected arcv, vpa or static)")


# results ----------------------------------------------------------------------


@dataclass
class ReplayResult:
    policy_name: str
    trace_label: str
    trace_id: str
    footprint: float
    execution_time: float
    restarts: int
    oom_events: int
    max_swap_used: int
    event_log: list = field(default_factory=list)
    limit_series: list = field(default_factory=list)  # [(t_start, limit)], each step holds until the next
    usage_series: list = field(default_factory=list)  # [(t, usage, swap)] as seen on the run's timeline
    failed: bool = False

    def row(self) -> dict:
        return {
            "trace": self.trace_label,
            "policy": self.policy_name,
            "footprint_byte_s": self.footprint,
            "exec_time_s": self.execution_time,
            "restarts": self.restarts,
            "oom_events": self.oom_events,
            "max_swap_bytes": self.max_swap_used,
        }

    def limit_at(self, t) -> int:
        current = self.limit_series[0][1]
        for start, limit in self.limit_series:
            if start > t + _EPS:
                break
            current = limit
        return current

    def events(self, kind) -> list:
        return [e for e in self.event_log if e.kind == kind]


def footprint(limit_series, span: float) -> float:
    """Exact integral of a step function [(t_start, value), ...] over [first t, span]."""
    if span <= 0 or not limit_series:
        return 0.0
    total = 0.0
    for (t, v), nxt in zip(limit_series, list(limit_series[1:]) + [(math.inf, None)]):
        end = min(nxt[0], span)
        if end > t:
            total += v * (end - t)
    return total


def _append_step(series, t, limit):
    if series and abs(series[-1][0] - t) <= _EPS:
        series[-1] = (series[-1][0], limit)
    elif not series or series[-1][1] != limit:
        series.append((t, limit))


# replays ----------------------------------------------------------------------


def replay(
    trace: Trace,
    policy="arcv",
    enforcement: EnforcementModel = EnforcementModel(),
    swap: SwapModel = SwapModel(),
    node_memory: int | None = None,
) -> ReplayResult:
    if isinstance(policy, str):
        policy = make_policy(policy)
    if isinstance(policy, ArcvSpec):
        return _replay_arcv(trace, policy, enforcement, swap, node_memory)
    if isinstance(policy, VpaSpec):
        return _replay_vpa(trace, policy, node_memory)
    if isinstance(policy, StaticSpec):
        return _replay_static(trace, policy, swap, node_memory)
    raise ConfigError(f"unsupported policy selection {policy!r}")


def arcv_initial_limit(trace: Trace, spec: ArcvSpec) -> int:
    if spec.initial_limit is not None:
        if not spec.initial_limit > 0:
            raise ConfigError("initial limit must be positive")
        return int(spec.initial_limit)
    expected = spec.expected_peak if spec.expected_peak is not None else peak(trace)
    return initial_limit(expected, spec.cfg).limit


class _SwapTracker:
    def __init__(self, swap: SwapModel, events):
        self.model = swap
        self.events = events
        self.current = 0
        self.max = 0
        self.byte_seconds = 0.0
        self._last_t = None

    def update(self, t, amount):
        if self._last_t is not None:
            self.byte_seconds += self.current * (t - self._last_t)
        self._last_t = t
        if amount > 0 and self.current == 0:
            self.events.append(Event(t, "swap_spill", int(amount)))
        elif amount == 0 and self.current > 0:
            self.events.append(Event(t, "swap_cleared", 0))
        self.current = int(amount)
        self.max = max(self.max, self.current)

    def slowdown(self) -> float:
        return self.model.slowdown_factor * self.byte_seconds


def _node_check(events, t, limit, node_memory):
    if node_memory is not None and limit > node_memory:
        events.append(Event(t, "warning", int(limit), "limit exceeds node memory"))


def _replay_arcv(trace, spec: ArcvSpec, enforcement, swap_model, node_memory) -> ReplayResult:
    cfg = spec.cfg
    t_rel = trace.t - trace.t[0]
    span = duration(trace)
    limit0 = arcv_initial_limit(trace, spec)
    policy = ArcvPolicy(cfg, limit0, trace.sample_interval)
    events = [Event(0.0, "recommend", limit0, Reason.INIT.value), Event(0.0, "limit_enforced", limit0)]
    _node_check(events, 0.0, limit0, node_memory)
    series = [(0.0, limit0)]
    usage_series = []
    swap = _SwapTracker(swap_model, events)
    enforced = limit0
    pending = None  # (target, due, blocked)

    def result(failed=False, end_t=span):
        return ReplayResult(
            spec.name, trace.label, trace.fingerprint(),
            footprint(series, end_t), end_t + swap.slowdown(), 0,
            int(failed), swap.max, events, series, usage_series, failed,
        )

    for t, demand in zip(t_rel.tolist(), trace.usage.tolist()):
        if pending is not None and t >= pending[1] - _EPS:
            target, due, blocked = pending
            if not (enforcement.downward_sync_blocks and target < enforced and target < demand):
                # a patch that had to wait for usage to drop lands at the sample that unblocked it
                at = t if blocked else due
                enforced = target
                pending = None
                events.append(Event(at, "limit_enforced", target))
                _append_step(series, at, target)
            else:
                pending = (target, due, True)
        spill = max(0, demand - enforced)
        resident = demand - spill
        if spill and not swap_model.absorbs(spill):
            usage_series.append((t, demand, swap.current))
            events.append(Event(t, "oom", int(demand)))
            events.append(Event(t, "end", int(enforced), policy.state.mode.value))
            res = result(failed=True, end_t=t)
            raise SimulationError(f"{spec.name}: OOM at t={t:.1f}s (usage {demand} > limit {enforced})", res)
        swap.update(t, spill)
        usage_series.append((t, demand, spill))
        decision = policy.step(t, resident, spill)
        if decision is None:
            continue
        if decision.after is not decision.before:
            events.append(Event(t, "state", decision.after.value, decision.signal.value))
        rec = decision.recommendation
        events.append(Event(t, "recommend", rec.limit, rec.reason.value))
        target_now = pending[0] if pending is not None else enforced
        if rec.limit != target_now:
            events.append(Event(t, "limit_requested", rec.limit))
            _node_check(events, t, rec.limit, node_memory)
            pending = (rec.limit, t + enforcement.sync_delay, False)
    events.append(Event(span, "end", int(enforced), policy.state.mode.value))
    return result()


def _replay_static(trace, spec: StaticSpec, swap_model, node_memory) -> ReplayResult:
    t_rel = trace.t - trace.t[0]
    span = duration(trace)
    limit = int(spec.limit)
    events = [Event(0.0, "limit_enforced", limit)]
    _node_check(events, 0.0, limit, node_memory)
    series = [(0.0, limit)]
    swap = _SwapTracker(swap_model, events)
    usage_series = []
    for t, demand in zip(t_rel.tolist(), trace.usage.tolist()):
        spill = max(0, demand - limit)
        usage_series.append((t, demand, spill))
        if spill and not swap_model.absorbs(spill):
            events.append(Event(t, "oom", int(demand)))
            events.append(Event(t, "end", limit))
            res = ReplayResult(spec.name, trace.label, trace.fingerprint(), footprint(series, t), t,
                               0, 1, swap.max, events, series, usage_series, True)
            raise SimulationError(f"static: OOM at t={t:.1f}s (usage {demand} > limit {limit})", res)
        swap.update(t, spill)
    events.append(Event(span, "end", limit))
    return ReplayResult(spec.name, trace.label, trace.fingerprint(), footprint(series, span),
                        span + swap.slowdown(), 0, 0, swap.max, events, series, usage_series)


def _replay_vpa(trace, spec: VpaSpec, node_memory) -> ReplayResult:
    # the simulated VPA restarts on OOM by definition; the swap model does not apply to it
    run = vpa_replay(trace, spec.initial_recommendation, node_memory)
    t_rel = (trace.t - trace.t[0]).tolist()
    usage = trace.usage.tolist()
    events, series, usage_series = [], [], []
    offset = 0.0
    for n, attempt in enumerate(run.attempt_log):
        events.append(Event(offset, "limit_enforced", attempt.recommendation))
        _node_check(events, offset, attempt.recommendation, node_memory)
        _append_step(series, offset, attempt.recommendation)
        usage_series.extend((offset + t, u, 0) for t, u in zip(t_rel, usage) if t <= attempt.progress + _EPS)
        offset += attempt.progress
        if attempt.oom_t is not None:
            events.append(Event(offset, "oom", attempt.oom_usage))
            events.append(Event(offset, "restart", run.attempt_log[n + 1].recommendation))
    events.append(Event(offset, "end", run.recommendation))
    fp = footprint(series, offset)
    return ReplayResult(spec.name, trace.label, trace.fingerprint(), fp, run.wall_clock,
                        run.restarts, run.restarts, 0, events, series, usage_series)


def replay_many(trace: Trace, policies, enforcement=EnforcementModel(), swap=SwapModel(),
                node_memory=None, workers: int | None = None) -> list[ReplayResult]:
    """Independent replays, possibly concurrent; results keep the input order."""
    policies = [make_policy(p) if isinstance(p, str) else p for p in policies]
    with ThreadPoolExecutor(max_workers=workers or min(4, len(policies) or 1)) as pool:
        return list(pool.map(lambda p: replay(trace, p, enforcement, swap, node_memory), policies))


# comparison -------------------------------------------------------------------


def _ratio(a, b):
    if b == 0:
        return 1.0 if a == 0 else math.inf
    return a / b


@dataclass
class ComparisonReport:
    rows: list
    ratios: list

    def to_csv(self) -> str:
        return _csv(REPORT_COLUMNS, self.rows)

    def ratios_csv(self) -> str:
        return _csv(RATIO_COLUMNS, self.ratios)

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "ratios": self.ratios}, indent=2, allow_nan=True) + "\n"

    def write(self, outdir, fmt="csv", stem="report") -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path = outdir / f"{stem}.json"
            path.write_text(self.to_json())
            return [path]
        paths = [outdir / f"{stem}.csv"]
        paths[0].write_text(self.to_csv())
        if self.ratios:
            paths.append(outdir / f"{stem}_ratios.csv")
            paths[1].write_text(self.ratios_csv())
        return paths


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in columns})
    return buf.getvalue()


def compare(results) -> ComparisonReport:
    """Report rows plus, for every pair i < j, result j relative to result i."""
    results = list(results)
    if len(results) < 2:
        raise ValidationError("compare needs at least two results")
    ids = {r.trace_id for r in results}
    if len(ids) != 1:
        raise ValidationError("results come from different traces")
    rows = [r.row() for r in results]
    ratios = []
    for i, base in enumerate(results):
        for other in results[i + 1:]:
            ratios.append({
                "trace": other.trace_label,
                "policy": other.policy_name,
                "baseline": base.policy_name,
                "footprint_ratio": _ratio(other.footprint, base.footprint),
                "exec_time_ratio": _ratio(other.execution_time, base.execution_time),
                "restarts": other.restarts,
                "baseline_restarts": base.restarts,
            })
    return ComparisonReport(rows, ratios)


# exports ----------------------------------------------------------------------


def report_csv(results) -> str:
    return _csv(REPORT_COLUMNS, [r.row() for r in results])


def limit_series_csv(result: ReplayResult) -> str:
    return _csv(("t", "limit"), [{"t": float(t), "limit": v} for t, v in result.limit_series])


def usage_series_csv(result: ReplayResult) -> str:
    """Plot data: usage, enforced limit and swap per replayed sample."""
    rows = [{"t": float(t), "usage": u, "limit": result.limit_at(t), "swap": s} for t, u, s in result.usage_series]
    return _csv(("t", "usage", "limit", "swap"), rows)


def events_csv(result: ReplayResult) -> str:
    return _csv(("t", "kind", "value", "note"), [asdict(e) for e in result.event_log])


def result_json(result: ReplayResult) -> str:
    doc = result.row()
    doc["trace_id"] = result.trace_id
    doc["failed"] = result.failed
    doc["events"] = [asdict(e) for e in result.event_log]
    doc["limit_series"] = [[float(t), v] for t, v in result.limit_series]
    return json.dumps(doc, indent=2) + "\n"


def load_result_json(path) -> ReplayResult:
    try:
        doc = json.loads(Path(path).read_text())
        return ReplayResult(
            doc["policy"], doc["trace"], doc["trace_id"], float(doc["footprint_byte_s"]),
            float(doc["exec_time_s"]), int(doc["restarts"]), int(doc["oom_events"]), int(doc["max_swap_bytes"]),
            [Event(**e) for e in doc.get("events", [])],
            [(float(t), int(v)) for t, v in doc.get("limit_series", [])],
            failed=bool(doc.get("failed", False)),
        )
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"cannot read replay result {path}: {exc}") from None
