"""Seeded synthetic memory traces mimicking the nine HPC workloads.

Every family is a deterministic shape in [0, 1] (fraction of the requested
peak) multiplied by bounded per-sample jitter.  The jitter amplitude is
chosen so that two neighbouring samples differ by at most ``noise``
relative to each other, which keeps the Growth families Growth and the
flat stretches signal-free for any ``noise`` up to the 2% band.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from vscale.errors import ValidationError
from vscale.trace import DEFAULT_INTERVAL, Trace

BASELINE = 0.05  # starting fraction of peak for ramp-like families


class Family(str, Enum):
    RAMP = "ramp"
    RAMP_PLATEAU = "ramp-plateau"
    STAIRCASE = "staircase"
    PERIODIC_DIP = "periodic-dip"
    CHAOTIC_BURST = "chaotic-burst"
    STABLE_FLAT = "stable-flat"
    LATE_SPIKE = "late-spike"


GROWTH_FAMILIES = frozenset({Family.RAMP, Family.RAMP_PLATEAU, Family.STAIRCASE, Family.STABLE_FLAT})
DYNAMIC_FAMILIES = frozenset(set(Family) - GROWTH_FAMILIES)


@dataclass(frozen=True)
class SyntheticSpec:
    family: Family
    duration: float
    peak: int
    noise: float = 0.01
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))


def _ramp(tau, rng):
    return BASELINE + (1 - BASELINE) * tau


def _ramp_plateau(tau, rng):
    return BASELINE + (1 - BASELINE) * np.minimum(tau / 0.2, 1.0)


def _staircase(tau, rng, steps=5):
    level = np.minimum(np.floor(tau * steps) + 1, steps) / steps
    return BASELINE + (1 - BASELINE) * level


def _stable_flat(tau, rng):
    return np.ones_like(tau)


def _periodic_dip(tau, rng, dips=3, depth=0.8):
    f = _ramp(tau, rng)
    n = len(tau)
    width = max(1, n // 40)
    for k in range(1, dips + 1):
        start = min(max(1, int(round((n - 1) * k / (dips + 1)))), n - 2)
        # dip relative to the sample before it so the drop is steep at any sampling rate
        f[start : min(start + width, n - 1)] = f[start - 1] * depth
    return f


def _chaotic_burst(tau, rng, base=0.45):
    n = len(tau)
    f = np.full(n, base)
    i = 1
    bursts = []
    while i < n - 2:
        gap = int(rng.integers(2, 6))
        rise = int(rng.integers(1, 4))
        if i + gap + rise >= n - 1:
            break
        start = i + gap
        height = rng.uniform(0.6, 1.0)
        f[start : start + rise] = np.linspace(base, height, rise + 1)[1:]
        bursts.append((start, rise))
        i = start + rise  # steep drop right after the burst top
    if not bursts:
        f[n // 2] = 1.0
    else:
        # one randomly chosen burst reaches the full peak
        start, rise = bursts[int(rng.integers(len(bursts)))]
        f[start + rise - 1] = 1.0
    return f


def _late_spike(tau, rng, plateau=0.85, trough=0.5):
    n = len(tau)
    dip = min(max(1, int(round(0.71 * (n - 1)))), n - 2)
    spike = min(max(dip + 1, int(round(0.77 * (n - 1)))), n - 1)
    ramp_end = min(int(round(0.08 * (n - 1))), dip - 1)
    f = np.full(n, plateau)
    if ramp_end > 0:
        f[: ramp_end + 1] = np.linspace(BASELINE, plateau, ramp_end + 1)
    f[dip:spike] = trough
    f[spike:] = 1.0
    return f


_SHAPES = {
    Family.RAMP: _ramp,
    Family.RAMP_PLATEAU: _ramp_plateau,
    Family.STAIRCASE: _staircase,
    Family.STABLE_FLAT: _stable_flat,
    Family.PERIODIC_DIP: _periodic_dip,
    Family.CHAOTIC_BURST: _chaotic_burst,
    Family.LATE_SPIKE: _late_spike,
}


def jitter_amplitude(noise: float) -> float:
    # (1 + a) / (1 - a) <= 1 + noise, with a small margin for integer rounding
    return 0.99 * noise / (2.0 + noise)


def generate(spec: SyntheticSpec, sample_interval: float = DEFAULT_INTERVAL, label: str | None = None) -> Trace:
    if not sample_interval > 0:
        raise ValidationError("sample_interval must be positive")
    if not spec.duration >= 2 * sample_interval:
        raise ValidationError(f"duration {spec.duration}s must span at least two sample intervals")
    if not spec.peak > 0:
        raise ValidationError("peak must be positive")
    if not 0 <= spec.noise < 1:
        raise ValidationError("noise must be in [0, 1)")
    steps = max(2, round(spec.duration / sample_interval))
    t = np.linspace(0.0, float(spec.duration), steps + 1)
    tau = t / spec.duration
    rng = np.random.default_rng(spec.seed)
    shape = np.asarray(_SHAPES[spec.family](tau, rng), dtype=np.float64)
    a = jitter_amplitude(spec.noise)
    shape = shape * (1.0 + rng.uniform(-a, a, size=len(t)))
    usage = np.maximum(np.rint(shape * spec.peak), 1).astype(np.int64)
    rss = (usage * 95) // 100
    swap = np.zeros_like(usage)
    name = label if label is not None else f"{spec.family.value}-s{spec.seed}"
    return Trace(t, usage, rss, swap, sample_interval=spec.duration / steps, label=name)


GB = 10**9
MB = 10**6

# name -> (family, execution time [s], max memory [bytes]) from the workload summary table
PRESETS = {
    "amr": (Family.RAMP_PLATEAU, 253, round(2.6 * GB)),
    "bfs": (Family.PERIODIC_DIP, 287, round(48.4 * GB)),
    "cm1": (Family.RAMP, 913, 415 * MB),
    "gromacs": (Family.STAIRCASE, 6420, round(4.5 * GB)),
    "kripke": (Family.RAMP_PLATEAU, 650, round(5.5 * GB)),
    "lammps": (Family.STABLE_FLAT, 2321, round(23.7 * MB)),
    "lulesh": (Family.CHAOTIC_BURST, 750, 696 * MB),
    "minife": (Family.LATE_SPIKE, 352, round(63.7 * GB)),
    "sputnipic": (Family.RAMP, 210, round(8.8 * GB)),
}

EXPECTED_PATTERN = {
    "amr": "G", "bfs": "D", "cm1": "G", "gromacs": "G", "kripke": "G",
    "lammps": "G", "lulesh": "D", "minife": "D", "sputnipic": "G",
}


def preset_spec(name: str, seed: int = 0, noise: float = 0.01) -> SyntheticSpec:
    try:
        family, dur, pk = PRESETS[name.lower()]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return SyntheticSpec(family, dur, pk, noise, seed)


def preset(name: str, seed: int = 0, noise: float = 0.01, sample_interval: float = DEFAULT_INTERVAL) -> Trace:
    return generate(preset_spec(name, seed, noise), sample_interval, label=name.lower())
