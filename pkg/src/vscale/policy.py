"""The ARC-V reactive state machine and its scaling rules.

States move on window-level memory alerts evaluated once per decision
epoch.  Each state owns a rule for the next limit:

* Growing: hold while there is headroom, otherwise raise to a 60 s
  linear forecast (plus headroom).
* Dynamic: decay, but never below the largest usage seen in the run.
* Stable: decay 10% per epoch down to 102% of current usage.

Any swap in use overrides the state rule and sizes the limit to cover
resident memory plus swapped pages.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from vscale.errors import ConfigError, InsufficientData, ValidationError
from vscale.signals import DEFAULT_CAPACITY, MemorySignal, Window, detect, forecast

_EPS = 1e-9


class Mode(str, Enum):
    INITIALIZING = "Initializing"
    GROWING = "Growing"
    DYNAMIC = "Dynamic"
    STABLE = "Stable"


class Reason(str, Enum):
    INIT = "Init"
    GROW_FORECAST = "GrowForecast"
    DYNAMIC_FLOOR = "DynamicFloor"
    STABLE_DECAY = "StableDecay"
    SWAP_RECOVERY = "SwapRecovery"
    HOLD = "Hold"


@dataclass(frozen=True)
class ArcvConfig:
    stability: float = 0.02
    decision_timeout: float = 60.0
    init_phase: float = 60.0
    forecast_horizon: float = 60.0
    stable_decay: float = 0.10
    stable_floor_factor: float = 1.02
    growing_gap_threshold: float = 0.10
    quiet_to_stable: int = 3
    initial_limit_factor: float = 1.20
    swap_headroom: float = 0.02
    window: int = DEFAULT_CAPACITY

    def __post_init__(self):
        if not self.stable_floor_factor > 1:
            raise ConfigError("stable_floor_factor must be > 1")
        if not 0 < self.stable_decay < 1:
            raise ConfigError("stable_decay must be in (0, 1)")
        if not 0 <= self.stability < 1:
            raise ConfigError("stability must be in [0, 1)")
        if self.decision_timeout <= 0 or self.init_phase < 0 or self.forecast_horizon <= 0:
            raise ConfigError("decision_timeout and forecast_horizon must be positive, init_phase non-negative")
        if self.growing_gap_threshold < 0 or self.swap_headroom < 0:
            raise ConfigError("growing_gap_threshold and swap_headroom must be non-negative")
        if self.quiet_to_stable < 1 or self.window < 2:
            raise ConfigError("quiet_to_stable must be >= 1 and window >= 2")
        if self.initial_limit_factor <= 0:
            raise ConfigError("initial_limit_factor must be positive")

    def check_interval(self, sample_interval: float):
        if self.decision_timeout < sample_interval * (1 - 1e-6):
            raise ConfigError(
                f"decision_timeout {self.decision_timeout}s is shorter than the sample interval {sample_interval}s"
            )

    @classmethod
    def from_mapping(cls, values: dict) -> "ArcvConfig":
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            name = key.strip().replace("-", "_")
            if name not in types:
                raise ConfigError(f"unknown ARC-V config key {key!r}")
            try:
                kwargs[name] = int(raw) if types[name] in (int, "int") else float(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        return cls(**kwargs)


def parse_kv(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split(sep, 1))
        out[key] = value
    return out


def load_config(path) -> ArcvConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = parse_kv(text)
    known = {f.name for f in dataclasses.fields(ArcvConfig)}
    return ArcvConfig.from_mapping({k: v for k, v in values.items() if k.replace("-", "_") in known})


@dataclass(frozen=True)
class ArcvState:
    mode: Mode = Mode.INITIALIZING
    global_max: int = 0
    quiet_streak: int = 0
    stable_streak: int = 0
    last_decision_t: float | None = None

    def seen(self, usage) -> "ArcvState":
        if usage > self.global_max:
            return dataclasses.replace(self, global_max=int(usage))
        return self


@dataclass(frozen=True)
class Recommendation:
    limit: int
    issued_t: float
    reason: Reason

    def __post_init__(self):
        if self.limit <= 0:
            raise ValidationError(f"recommended limit must be positive, got {self.limit}")


def initial_limit(expected_peak, cfg: ArcvConfig = ArcvConfig(), t: float = 0.0) -> Recommendation:
    if not expected_peak > 0:
        raise ValidationError(f"expected peak must be positive, got {expected_peak}")
    return Recommendation(round(expected_peak * cfg.initial_limit_factor), t, Reason.INIT)


def transition(state: ArcvState, signal: MemorySignal, cfg: ArcvConfig = ArcvConfig()) -> ArcvState:
    quiet = state.quiet_streak + 1 if signal is MemorySignal.NO_SIGNAL else 0
    mode = state.mode
    if mode is Mode.INITIALIZING:
        new = {
            MemorySignal.SIGNAL_I: Mode.GROWING,
            MemorySignal.SIGNAL_II: Mode.DYNAMIC,
            MemorySignal.NO_SIGNAL: Mode.STABLE,
        }[signal]
    elif signal is MemorySignal.SIGNAL_II:
        new = Mode.DYNAMIC
    elif signal is MemorySignal.SIGNAL_I:
        # Dynamic never jumps straight to Growing
        new = Mode.DYNAMIC if mode is Mode.DYNAMIC else Mode.GROWING
    elif mode is Mode.STABLE or quiet >= cfg.quiet_to_stable:
        new = Mode.STABLE
    else:
        new = mode
    stable_streak = state.stable_streak + 1 if new is Mode.STABLE else 0
    return dataclasses.replace(state, mode=new, quiet_streak=quiet, stable_streak=stable_streak)


def _decayed(current_limit, current_usage, cfg):
    return max(
        round(current_limit * (1.0 - cfg.stable_decay)),
        math.ceil(current_usage * cfg.stable_floor_factor),
    )


def recommend(
    state: ArcvState,
    window,
    current_limit,
    current_usage,
    current_swap,
    cfg: ArcvConfig = ArcvConfig(),
    t: float = 0.0,
    sample_interval: float = 5.0,
) -> Recommendation:
    if current_swap > 0:
        limit = math.ceil((current_usage + current_swap) * (1.0 + cfg.swap_headroom))
        return Recommendation(limit, t, Reason.SWAP_RECOVERY)
    mode = state.mode
    if mode is Mode.GROWING:
        values = window.values if isinstance(window, Window) else tuple(window)
        if len(values) < 2:
            raise InsufficientData("Growing mode needs at least 2 window samples to forecast")
        gap = (current_limit - current_usage) / current_limit
        if gap < cfg.growing_gap_threshold:
            predicted = forecast(values, cfg.forecast_horizon, sample_interval)
            return Recommendation(math.ceil(predicted * (1.0 + cfg.swap_headroom)), t, Reason.GROW_FORECAST)
        return Recommendation(int(current_limit), t, Reason.HOLD)
    if mode is Mode.DYNAMIC:
        limit = max(_decayed(current_limit, current_usage, cfg), int(state.global_max))
        return Recommendation(limit, t, Reason.DYNAMIC_FLOOR)
    if mode is Mode.STABLE:
        return Recommendation(_decayed(current_limit, current_usage, cfg), t, Reason.STABLE_DECAY)
    return Recommendation(int(current_limit), t, Reason.HOLD)


@dataclass
class Decision:
    t: float
    signal: MemorySignal
    before: Mode
    after: Mode
    recommendation: Recommendation


@dataclass
class ArcvPolicy:
    """Sequential driver: feed every sample to ``observe``; call ``decide`` when ``due``.

    ``limit`` is the nominal (last requested) limit, which is what the
    controller reasons about; enforcement lag is modelled elsewhere.
    """

    cfg: ArcvConfig
    limit: int
    sample_interval: float = 5.0
    t0: float = 0.0
    state: ArcvState = field(default_factory=ArcvState)
    window: Window = None
    decisions: list = field(default_factory=list)

    def __post_init__(self):
        if self.limit <= 0:
            raise ValidationError("initial limit must be positive")
        self.cfg.check_interval(self.sample_interval)
        if self.window is None:
            self.window = Window(self.cfg.window)

    @classmethod
    def for_peak(cls, expected_peak, cfg: ArcvConfig = ArcvConfig(), sample_interval=5.0, t0=0.0):
        return cls(cfg, initial_limit(expected_peak, cfg, t0).limit, sample_interval, t0)

    def observe(self, t, usage):
        self.window.push(int(usage))
        self.state = self.state.seen(usage)

    def due(self, t) -> bool:
        last = self.state.last_decision_t
        if last is None:
            return t >= self.t0 + self.cfg.init_phase - _EPS
        return t >= last + self.cfg.decision_timeout - _EPS

    def decide(self, t, usage, swap) -> Decision:
        signal = detect(self.window, self.cfg.stability)
        before = self.state.mode
        self.state = dataclasses.replace(transition(self.state, signal, self.cfg), last_decision_t=t)
        rec = recommend(self.state, self.window, self.limit, usage, swap, self.cfg, t, self.sample_interval)
        self.limit = rec.limit
        d = Decision(t, signal, before, self.state.mode, rec)
        self.decisions.append(d)
        return d

    def step(self, t, usage, swap=0):
        """Observe one sample and decide if an epoch is due; returns the Decision or None."""
        self.observe(t, usage)
        if self.due(t):
            return self.decide(t, usage, swap)
        return None
