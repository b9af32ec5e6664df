"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py``; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import math
import random
import time

import numpy as np

from vscale.cli import main
from vscale.controller import drive, replay_ports, run_controller
from vscale.harness import (
    ArcvSpec,
    EnforcementModel,
    StaticSpec,
    SwapModel,
    VpaSpec,
    arcv_initial_limit,
    compare,
    footprint,
    replay,
)
from vscale.patterns import classify
from vscale.policy import ArcvConfig, ArcvState, Mode, Reason, recommend, transition
from vscale.signals import MemorySignal
from vscale.synthetic import EXPECTED_PATTERN, PRESETS, preset
from vscale.trace import duration, peak
from vscale.vpa import vpa_footprint, vpa_replay

from conftest import ACCEPTANCE_LINES, MB, brute_force_vpa, make_trace


def gate(n, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_1_vpa_restart_cascade():
    tr = make_trace(np.linspace(0, 100, 1001), np.arange(1001) * 100_000, label="ramp")
    start = time.perf_counter()
    run = vpa_replay(tr, 50 * MB)
    elapsed = time.perf_counter() - start
    expected = [50 * MB, 60 * MB, 72 * MB, 86.4 * MB, 103.68 * MB]
    recs, wall, area = brute_force_vpa(tr.t.tolist(), tr.usage.tolist(), 50 * MB)
    ok = (
        run.recommendations == expected
        and run.restarts == 4
        and math.isclose(run.wall_clock, 368.4, rel_tol=1e-6)
        and recs == run.recommendations
        and math.isclose(wall, run.wall_clock, rel_tol=1e-12)
        and math.isclose(area, vpa_footprint(run), rel_tol=1e-12)
        and elapsed < 1.0
    )
    gate(1, ok, f"recs={[r / MB for r in run.recommendations]} MB restarts={run.restarts} "
                f"wall={run.wall_clock:.6f}s oracle_wall={wall:.6f}s runtime={elapsed * 1e3:.1f}ms")


def test_2_oom_elimination():
    start = time.perf_counter()
    bad = []
    for name in PRESETS:
        tr = preset(name)
        res = replay(tr, "arcv", swap=SwapModel(enabled=True, slowdown_factor=0.0))
        if res.oom_events or res.restarts or res.execution_time != duration(tr):
            bad.append(name)
    elapsed = time.perf_counter() - start
    gate(2, not bad and elapsed < 5.0, f"{len(PRESETS)} presets, failing={bad}, runtime={elapsed:.2f}s")


def test_3_footprint_dominance():
    ratios = {}
    for name in ("cm1", "sputnipic", "bfs"):
        tr = preset(name)
        vpa_spec = VpaSpec(initial_recommendation=round(1.2 * int(tr.usage[0])))
        rep = compare([replay(tr, "arcv"), replay(tr, vpa_spec)])
        ratios[name] = rep.ratios[0]["footprint_ratio"]
    gate(3, all(r > 1 for r in ratios.values()),
         "vpa/arcv footprint " + ", ".join(f"{k}={v:.3f}" for k, v in ratios.items()))


def _lammps_convergence(trace, limit0, cfg):
    """Decision epochs until the requested limit is within one decay step of the floor."""
    res = replay(trace, ArcvSpec(cfg, initial_limit=limit0))
    u = peak(trace)
    floor = cfg.stable_floor_factor * u
    threshold = floor / (1 - cfg.stable_decay)
    bound = math.ceil(math.log(floor / limit0, 1 - cfg.stable_decay))
    epochs = [e for e in res.events("recommend") if e.note != Reason.INIT.value]
    reached = next((k for k, e in enumerate(epochs, 1) if e.value <= threshold), None)
    available = len(epochs)
    static = replay(trace, StaticSpec(limit0))
    return reached, bound, available, static.footprint / res.footprint


def test_4_stable_convergence():
    tr = preset("lammps")
    u = peak(tr)
    cfg = ArcvConfig()
    rows, ok_conv, ok_ratio = [], True, True
    for mult in (10, 20, 50, 100):
        reached, bound, available, ratio = _lammps_convergence(tr, mult * u, cfg)
        if bound <= available:  # otherwise the trace ends before the bound is due
            ok_conv &= reached is not None and reached <= bound
        ok_ratio &= ratio > 5
        rows.append(f"L={mult}u epochs={reached}/{bound} (trace has {available}) static/arcv={ratio:.2f}")
    gate(4, ok_conv and ok_ratio, f"convergence {'ok' if ok_conv else 'FAIL'}, ratio>5 {'ok' if ok_ratio else 'FAIL'}: "
                                  + "; ".join(rows))


def test_5_pattern_labels():
    wrong = []
    for noise in (0.0, 0.01, 0.02):
        for seed in range(100):
            for name in PRESETS:
                got = classify(preset(name, seed=seed, noise=noise)).label.short
                if got != EXPECTED_PATTERN[name]:
                    wrong.append((name, seed, noise))
    counts = sorted(EXPECTED_PATTERN.values())
    gate(5, not wrong and counts.count("G") == 6 and counts.count("D") == 3,
         f"9 presets x 100 seeds x noise {{0, 1%, 2%}}: mismatches={wrong[:5]}")


def test_6_swap_recovery():
    tr = preset("minife")
    res = replay(tr, "arcv")
    spill = res.events("swap_spill")
    at = {t: (u, s) for t, u, s in res.usage_series}
    recov = [e for e in res.events("recommend")
             if e.note == Reason.SWAP_RECOVERY.value and spill and e.t >= spill[0].t]
    covers = bool(recov)
    if recov:
        demand, swapped = at[recov[0].t]
        resident = demand - swapped
        covers = recov[0].value >= resident + swapped
    fp = footprint(res.limit_series, duration(tr))
    swap_area = sum(s * (b[0] - a[0]) for a, b in zip(res.usage_series, res.usage_series[1:]) for s in [a[2]])
    ok = bool(spill) and covers and res.footprint == fp and swap_area > 0 and res.oom_events == 0
    gate(6, ok, f"spill at {spill[0].t if spill else None}s, SwapRecovery at {recov[0].t if recov else None}s "
                f"limit={recov[0].value if recov else None}, footprint==limit integral: {res.footprint == fp}, "
                f"swap area {swap_area:.4g} B*s not counted")


def test_7_state_machine_soundness():
    rng = random.Random(7)
    signals = list(MemorySignal)
    cfg = ArcvConfig()
    edges = floor_breaks = 0
    for _ in range(10_000):
        state = ArcvState()
        limit = rng.randint(10**6, 10**11)
        for _ in range(rng.randint(1, 40)):
            nxt = transition(state, rng.choice(signals), cfg)
            if state.mode is Mode.DYNAMIC and nxt.mode is Mode.GROWING:
                edges += 1
            state = nxt
            usage = rng.randint(1, limit)
            state = ArcvState(state.mode, max(state.global_max, usage), state.quiet_streak,
                              state.stable_streak, state.last_decision_t)
            if state.mode is Mode.GROWING:
                continue
            rec = recommend(state, [usage] * 2, limit, usage, 0, cfg)
            if rec.reason is Reason.STABLE_DECAY and rec.limit < cfg.stable_floor_factor * usage:
                floor_breaks += 1
            limit = rec.limit
    gate(7, edges == 0 and floor_breaks == 0,
         f"10000 sequences: dynamic->growing edges={edges}, stable floor violations={floor_breaks}")


def test_8_port_equivalence():
    rng = random.Random(8)
    names = sorted(PRESETS)
    mismatched = []
    for _ in range(20):
        name = rng.choice(names)
        tr = preset(name, seed=rng.randint(0, 999), noise=rng.choice((0.0, 0.01, 0.02)))
        cfg = ArcvConfig(
            stability=rng.choice((0.01, 0.02, 0.05)),
            decision_timeout=rng.choice((30.0, 60.0, 90.0)),
            init_phase=rng.choice((30.0, 60.0)),
            stable_decay=rng.choice((0.05, 0.10, 0.20)),
            quiet_to_stable=rng.randint(1, 4),
        )
        enf = EnforcementModel(sync_delay=rng.choice((0.0, 5.0, 10.0)), downward_sync_blocks=rng.random() < 0.8)
        spec = ArcvSpec(cfg)
        src, port = replay_ports(tr, arcv_initial_limit(tr, spec), enf)
        report = drive(run_controller(src, port, cfg, cadence=tr.sample_interval,
                                      initial_limit=arcv_initial_limit(tr, spec)))
        if report.events != replay(tr, spec, enf).event_log:
            mismatched.append(name)
    gate(8, not mismatched, f"20 random (preset, config) pairs, mismatched={mismatched}")


def _cli_outputs(root):
    runs = [["simulate", "--preset", name, "--policy", pol, "--out", str(root)]
            for name in ("cm1", "minife", "lammps") for pol in ("arcv", "vpa")]
    runs.append(["simulate", "--preset", "lulesh", "--format", "json", "--out", str(root)])
    runs.append(["compare", "--preset", "sputnipic", "arcv", "vpa", "--out", str(root)])
    runs.append(["gen", "--preset", "bfs", "-o", str(root / "bfs.csv")])
    for argv in runs:
        assert main(argv) == 0
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_9_determinism(tmp_path, capsys):
    a = _cli_outputs(tmp_path / "a")
    b = _cli_outputs(tmp_path / "b")
    capsys.readouterr()
    differ = [str(k) for k in a if a[k] != b.get(k)]
    gate(9, a.keys() == b.keys() and not differ, f"{len(a)} report files compared, differing={differ}")
