"""Figures written next to the CSV/JSON reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (7.0, 3.6),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "svg.hashsalt": "vscale",
})

USAGE_COLOR = "tab:blue"
LIMIT_COLOR = "tab:green"
SWAP_COLOR = "tab:red"


def _unit(max_bytes):
    for name, scale in (("GB", 1e9), ("MB", 1e6), ("KB", 1e3)):
        if max_bytes >= scale:
            return name, scale
    return "B", 1.0


def _save(fig, path):
    # no Software/date metadata so reruns are byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_run(result, path, title=None):
    """Usage, enforced limit (step) and swap over the run's timeline."""
    series = np.asarray(result.usage_series, dtype=float).reshape(-1, 3)
    steps = result.limit_series
    top = max([v for _, v in steps] + ([series[:, 1].max()] if len(series) else [1]))
    unit, scale = _unit(top)
    fig, ax = plt.subplots()
    if len(series):
        ax.plot(series[:, 0], series[:, 1] / scale, color=USAGE_COLOR, lw=1.2, label="usage")
        if series[:, 2].any():
            ax.fill_between(series[:, 0], 0, series[:, 2] / scale, color=SWAP_COLOR, alpha=0.35, step="post", label="swap")
    end = max(result.execution_time, steps[-1][0] if steps else 0)
    xs = [t for t, _ in steps] + [end]
    ys = [v / scale for _, v in steps] + [steps[-1][1] / scale]
    ax.step(xs, ys, where="post", color=LIMIT_COLOR, lw=1.4, label=f"limit ({result.policy_name})")
    for e in result.event_log:
        if e.kind == "oom":
            ax.axvline(e.t, color=SWAP_COLOR, lw=0.8, ls=":")
    ax.set_xlabel("time [s]")
    ax.set_ylabel(f"memory [{unit}]")
    ax.set_ylim(bottom=0)
    ax.set_title(title or f"{result.trace_label}: {result.policy_name}")
    ax.legend(loc="lower right")
    fig.tight_layout()
    _save(fig, path)


def plot_ratios(report, path, title=None):
    """Bar chart of footprint and execution-time ratios for each compared pair."""
    ratios = report.ratios
    labels = [f"{r['policy']}/{r['baseline']}" for r in ratios]
    x = np.arange(len(ratios))
    fig, ax = plt.subplots()
    w = 0.38
    ax.bar(x - w / 2, [r["footprint_ratio"] for r in ratios], w, label="footprint", color=LIMIT_COLOR)
    ax.bar(x + w / 2, [r["exec_time_ratio"] for r in ratios], w, label="execution time", color=USAGE_COLOR)
    ax.axhline(1.0, color="0.3", lw=0.8)
    ax.set_xticks(x, labels)
    ax.set_ylabel("ratio")
    if ratios:
        ax.set_title(title or ratios[0]["trace"])
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
