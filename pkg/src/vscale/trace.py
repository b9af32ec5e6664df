"""Memory trace data model, file ingestion and resampling.

A trace is one container run scraped at a fixed cadence.  On disk it is a
CSV with header ``t,usage,rss,swap`` (seconds, raw integer bytes) or a
JSON-lines file with the same field names.  ``rss`` and ``swap`` may be
omitted and default to 0.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from vscale.errors import ParseError, ValidationError

FIELDS = ("t", "usage", "rss", "swap")
DEFAULT_INTERVAL = 5.0


class MemorySample(NamedTuple):
    t: float
    usage: int
    rss: int = 0
    swap: int = 0


def _check_sample(t, usage, rss, swap, row=None):
    where = f" (row {row})" if row is not None else ""
    if not math.isfinite(t) or t < 0:
        raise ValidationError(f"sample time must be finite and non-negative{where}: {t}")
    if usage < 0 or rss < 0 or swap < 0:
        raise ValidationError(f"negative byte value{where}")
    if rss > usage:
        raise ValidationError(f"rss {rss} exceeds usage {usage}{where}")


@dataclass(frozen=True, eq=False)
class Trace:
    """Immutable, validated memory series for one run.

    Arrays are stored read-only; ``samples`` materialises ``MemorySample``
    tuples on demand.
    """

    t: np.ndarray
    usage: np.ndarray
    rss: np.ndarray
    swap: np.ndarray
    sample_interval: float = DEFAULT_INTERVAL
    label: str = ""

    def __post_init__(self):
        arrays = {}
        for name, dtype in (("t", np.float64), ("usage", np.int64), ("rss", np.int64), ("swap", np.int64)):
            arr = np.array(getattr(self, name), dtype=dtype, copy=True)
            if arr.ndim != 1:
                raise ValidationError(f"{name} must be one-dimensional")
            arr.setflags(write=False)
            arrays[name] = arr
        n = len(arrays["t"])
        if any(len(a) != n for a in arrays.values()):
            raise ValidationError("trace columns have different lengths")
        if n < 2:
            raise ValidationError(f"a trace needs at least 2 samples, got {n}")
        t = arrays["t"]
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValidationError("sample times must be finite and non-negative")
        if np.any(np.diff(t) <= 0):
            bad = int(np.argmax(np.diff(t) <= 0)) + 1
            raise ValidationError(f"timestamps not strictly increasing at sample {bad}")
        if np.any(arrays["usage"] < 0) or np.any(arrays["rss"] < 0) or np.any(arrays["swap"] < 0):
            raise ValidationError("negative byte values in trace")
        if np.any(arrays["rss"] > arrays["usage"]):
            raise ValidationError("rss exceeds usage")
        if not (self.sample_interval > 0 and math.isfinite(self.sample_interval)):
            raise ValidationError("sample_interval must be positive")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "sample_interval", float(self.sample_interval))

    @classmethod
    def from_samples(cls, samples: Iterable, sample_interval: float | None = None, label: str = "") -> "Trace":
        samples = [MemorySample(*s) for s in samples]
        if len(samples) < 2:
            raise ValidationError(f"a trace needs at least 2 samples, got {len(samples)}")
        cols = list(zip(*samples))
        t = np.asarray(cols[0], dtype=np.float64)
        if sample_interval is None:
            sample_interval = _mean_spacing(t)
        return cls(t, cols[1], cols[2], cols[3], sample_interval=sample_interval, label=label)

    @property
    def samples(self) -> list[MemorySample]:
        return [
            MemorySample(float(t), int(u), int(r), int(s))
            for t, u, r, s in zip(self.t, self.usage, self.rss, self.swap)
        ]

    def __len__(self):
        return len(self.t)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.label == other.label
            and self.sample_interval == other.sample_interval
            and all(np.array_equal(getattr(self, f), getattr(other, f)) for f in FIELDS)
        )

    def __hash__(self):
        return hash(self.fingerprint())

    def fingerprint(self) -> str:
        """Content hash of the sample columns (label excluded)."""
        h = hashlib.sha256()
        for f in FIELDS:
            h.update(getattr(self, f).tobytes())
        return h.hexdigest()[:16]

    def with_label(self, label: str) -> "Trace":
        return Trace(self.t, self.usage, self.rss, self.swap, self.sample_interval, label)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for s in self.samples:
            w.writerow((repr(s.t), s.usage, s.rss, s.swap))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_jsonl(self, path=None) -> str:
        text = "".join(json.dumps(s._asdict()) + "\n" for s in self.samples)
        if path is not None:
            Path(path).write_text(text)
        return text


def _mean_spacing(t) -> float:
    if len(t) < 2:
        return DEFAULT_INTERVAL
    return float((t[-1] - t[0]) / (len(t) - 1))


def _parse_int(value, field, row):
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"row {row}: {field}={value!r} is not a number") from None
    if not math.isfinite(f) or f != int(f):
        raise ParseError(f"row {row}: {field}={value!r} is not an integer byte count")
    return int(f)


def _row_to_sample(rec: dict, row: int) -> MemorySample:
    if "t" not in rec or "usage" not in rec:
        raise ParseError(f"row {row}: missing t or usage")
    try:
        t = float(rec["t"])
    except (TypeError, ValueError):
        raise ParseError(f"row {row}: t={rec['t']!r} is not a number") from None
    usage = _parse_int(rec["usage"], "usage", row)
    rss = _parse_int(rec["rss"], "rss", row) if rec.get("rss") not in (None, "") else 0
    swap = _parse_int(rec["swap"], "swap", row) if rec.get("swap") not in (None, "") else 0
    _check_sample(t, usage, rss, swap, row)
    return MemorySample(t, usage, rss, swap)


def _read_csv(text: str) -> list[MemorySample]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty trace file")
    first = [c.strip() for c in lines[0].split(",")]
    if "t" in first:
        reader = csv.DictReader(io.StringIO("\n".join(lines)), skipinitialspace=True)
        rows = list(reader)
        start = 2
    else:
        # headerless: positional t,usage[,rss[,swap]]
        rows = []
        for ln in lines:
            cells = [c.strip() for c in ln.split(",")]
            if len(cells) < 2 or len(cells) > 4:
                raise ParseError(f"expected 2-4 columns, got {len(cells)}: {ln!r}")
            rows.append(dict(zip(FIELDS, cells)))
        start = 1
    out = []
    for i, rec in enumerate(rows, start=start):
        if None in rec:
            raise ParseError(f"row {i}: too many columns")
        out.append(_row_to_sample(rec, i))
    return out


def _read_jsonl(text: str) -> list[MemorySample]:
    out = []
    for i, ln in enumerate(text.splitlines(), start=1):
        if not ln.strip():
            continue
        try:
            rec = json.loads(ln)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {i}: {exc}") from None
        if not isinstance(rec, dict):
            raise ParseError(f"line {i}: expected an object")
        out.append(_row_to_sample(rec, i))
    return out


def load_trace(path, format: str | None = None, label: str | None = None) -> Trace:
    """Read a trace file; ``format`` is ``csv`` or ``json-lines`` (inferred from suffix when omitted)."""
    path = Path(path)
    if format is None:
        format = "json-lines" if path.suffix in (".jsonl", ".ndjson", ".json") else "csv"
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    if format == "csv":
        samples = _read_csv(text)
    elif format in ("json-lines", "jsonl"):
        samples = _read_jsonl(text)
    else:
        raise ValueError(f"unknown trace format {format!r}")
    return Trace.from_samples(samples, label=path.stem if label is None else label)


def resample(trace: Trace, interval: float) -> Trace:
    """Linearly interpolate onto a uniform grid spanning the trace exactly.

    The grid has ``round(span / interval)`` steps so both endpoints are kept
    bit-exact; the resulting spacing is reported as ``sample_interval``.
    """
    if not interval > 0 or not math.isfinite(interval):
        raise ValidationError(f"resample interval must be positive, got {interval}")
    t0, t1 = float(trace.t[0]), float(trace.t[-1])
    steps = max(1, round((t1 - t0) / interval))
    grid = np.linspace(t0, t1, steps + 1)
    cols = [np.rint(np.interp(grid, trace.t, getattr(trace, f))).astype(np.int64) for f in FIELDS[1:]]
    # grid endpoints coincide with knots, so np.interp returns the knot values exactly
    return Trace(grid, *cols, sample_interval=(t1 - t0) / steps, label=trace.label)


def peak(trace: Trace) -> int:
    return int(trace.usage.max())


def duration(trace: Trace) -> float:
    return float(trace.t[-1] - trace.t[0])
