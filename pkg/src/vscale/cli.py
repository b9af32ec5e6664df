"""Command-line interface: ``vscale classify|simulate|compare|gen``.

Exit codes: 0 success, 2 invalid input or configuration, 3 simulation failure.
Settings may come from a key-value file named by ``$ARCV_CONFIG``;
command-line flags override it.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import re
import sys
from pathlib import Path

from vscale.errors import ConfigError, ParseError, SimulationError, ValidationError
from vscale.harness import (
    ArcvSpec,
    EnforcementModel,
    StaticSpec,
    SwapModel,
    VpaSpec,
    compare,
    events_csv,
    limit_series_csv,
    load_result_json,
    replay,
    replay_many,
    report_csv,
    result_json,
    usage_series_csv,
)
from vscale.patterns import classify
from vscale.policy import ArcvConfig, parse_kv
from vscale.synthetic import PRESETS, Family, SyntheticSpec, generate, preset, preset_spec
from vscale.trace import load_trace

log = logging.getLogger("vscale")

EXIT_OK, EXIT_INVALID, EXIT_SIMULATION = 0, 2, 3

_UNITS = {
    "": 1, "b": 1,
    "kb": 10**3, "mb": 10**6, "gb": 10**9, "tb": 10**12,
    "kib": 2**10, "mib": 2**20, "gib": 2**30, "tib": 2**40,
    "k": 10**3, "m": 10**6, "g": 10**9, "t": 10**12,
}

HARNESS_KEYS = {
    "sync_delay": float,
    "downward_sync_blocks": lambda v: str(v).strip().lower() in ("1", "true", "yes", "on"),
    "swap_enabled": lambda v: str(v).strip().lower() in ("1", "true", "yes", "on"),
    "swap_slowdown": float,
    "swap_capacity": lambda v: parse_bytes(v),
    "node_memory": lambda v: parse_bytes(v),
}
ARCV_KEYS = {f.name for f in dataclasses.fields(ArcvConfig)}


def parse_bytes(text) -> int:
    """``"1GB"`` -> 1000000000; ``"2GiB"`` -> 2147483648; bare numbers are bytes."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*([A-Za-z]*)\s*", str(text))
    if not m or m.group(2).lower() not in _UNITS:
        raise ValidationError(f"cannot parse byte size {text!r}")
    return round(float(m.group(1)) * _UNITS[m.group(2).lower()])


def _byte_arg(text):
    try:
        return parse_bytes(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# settings ---------------------------------------------------------------------


def _file_settings() -> dict:
    path = os.environ.get("ARCV_CONFIG")
    if not path:
        return {}
    try:
        raw = parse_kv(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"ARCV_CONFIG={path}: {exc}") from None
    out = {}
    for key, value in raw.items():
        name = key.strip().replace("-", "_")
        if name in ARCV_KEYS:
            out[name] = value
        elif name in HARNESS_KEYS:
            out[name] = HARNESS_KEYS[name](value)
        else:
            raise ConfigError(f"ARCV_CONFIG: unknown key {key!r}")
    return out


def _settings(args) -> dict:
    merged = _file_settings()
    for key in list(ARCV_KEYS) + list(HARNESS_KEYS):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _arcv_config(settings) -> ArcvConfig:
    return ArcvConfig.from_mapping({k: v for k, v in settings.items() if k in ARCV_KEYS})


def _models(settings):
    enforcement = EnforcementModel(
        sync_delay=settings.get("sync_delay", 10.0),
        downward_sync_blocks=settings.get("downward_sync_blocks", True),
    )
    swap = SwapModel(
        enabled=settings.get("swap_enabled", True),
        slowdown_factor=settings.get("swap_slowdown", 0.0),
        capacity=settings.get("swap_capacity"),
    )
    return enforcement, swap


def _trace(args):
    if bool(args.preset) == bool(args.trace):
        raise ValidationError("give exactly one of a trace file or --preset")
    if args.preset:
        return preset(args.preset, seed=args.seed, noise=args.noise)
    return load_trace(args.trace, format=args.trace_format)


def _policy(name, args, settings):
    name = name.lower()
    if name == "arcv":
        return ArcvSpec(cfg=_arcv_config(settings), initial_limit=args.initial_limit, expected_peak=args.expected_peak)
    if name in ("vpa", "vpa-sim"):
        if args.initial_rec is not None and args.initial_rec <= 0:
            raise ConfigError("--initial-rec must be positive")
        return VpaSpec(initial_recommendation=args.initial_rec)
    if name == "static":
        if args.limit is None:
            raise ConfigError("--policy static needs --limit")
        return StaticSpec(args.limit)
    raise ConfigError(f"unknown policy {name!r}")


# commands ---------------------------------------------------------------------


def cmd_classify(args) -> int:
    label = classify(_trace(args), band=args.band)
    if args.verbose:
        extra = f" (first violation at sample {label.violation_index})" if label.violation_index is not None else ""
        print(f"{label.label.short} {label.label.value}{extra}")
    else:
        print(label.label.short)
    return EXIT_OK


def _write_run(result, outdir: Path, fmt: str, plot: bool) -> list[Path]:
    stem = f"{result.trace_label}-{result.policy_name}"
    paths = []
    if fmt == "json":
        p = outdir / f"{stem}.json"
        p.write_text(result_json(result))
        paths.append(p)
    else:
        p = outdir / f"{stem}_report.csv"
        p.write_text(report_csv([result]))
        paths.append(p)
        p = outdir / f"{stem}_events.csv"
        p.write_text(events_csv(result))
        paths.append(p)
    for name, text in (("limit_series", limit_series_csv(result)), ("series", usage_series_csv(result))):
        p = outdir / f"{stem}_{name}.csv"
        p.write_text(text)
        paths.append(p)
    if plot:
        from vscale.plotting import plot_run

        p = outdir / f"{stem}.png"
        plot_run(result, p)
        paths.append(p)
    return paths


def cmd_simulate(args) -> int:
    settings = _settings(args)
    trace = _trace(args)
    policy = _policy(args.policy, args, settings)
    enforcement, swap = _models(settings)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        result = replay(trace, policy, enforcement, swap, settings.get("node_memory"))
        code = EXIT_OK
    except SimulationError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        result, code = exc.result, EXIT_SIMULATION
    if result is not None:
        for p in _write_run(result, outdir, args.format, args.plot):
            log.info("wrote %s", p)
        r = result.row()
        print(
            f"{r['trace']} {r['policy']}: footprint={r['footprint_byte_s']:.6g} B*s "
            f"exec_time={r['exec_time_s']:.6g} s restarts={r['restarts']} "
            f"oom_events={r['oom_events']} max_swap={r['max_swap_bytes']} B"
        )
    return code


def cmd_compare(args) -> int:
    settings = _settings(args)
    results = [load_result_json(p) for p in args.result]
    if args.policies:
        trace = _trace(args)
        policies = [_policy(name, args, settings) for name in args.policies]
        enforcement, swap = _models(settings)
        try:
            results = replay_many(trace, policies, enforcement, swap, settings.get("node_memory")) + results
        except SimulationError as exc:
            print(f"simulation failed: {exc}", file=sys.stderr)
            return EXIT_SIMULATION
    report = compare(results)
    outdir = Path(args.out)
    written = report.write(outdir, args.format, stem=args.stem)
    if args.plot:
        from vscale.plotting import plot_ratios

        plot_ratios(report, outdir / f"{args.stem}_ratios.png")
    for row in report.ratios:
        print(
            f"{row['trace']} {row['policy']}/{row['baseline']}: "
            f"footprint_ratio={row['footprint_ratio']:.4g} exec_time_ratio={row['exec_time_ratio']:.4g}"
        )
    for p in written:
        log.info("wrote %s", p)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.preset:
        spec = preset_spec(args.preset, seed=args.seed, noise=args.noise)
        label = args.preset.lower()
    else:
        if args.family is None or args.peak is None or args.duration is None:
            raise ValidationError("gen needs --preset, or --family with --peak and --duration")
        spec = SyntheticSpec(args.family, args.duration, args.peak, args.noise, args.seed)
        label = None
    if args.duration is not None and args.preset:
        spec = dataclasses.replace(spec, duration=args.duration)
    if args.peak is not None and args.preset:
        spec = dataclasses.replace(spec, peak=args.peak)
    trace = generate(spec, args.interval, label=label)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "json-lines":
        trace.to_jsonl(out)
    else:
        trace.to_csv(out)
    print(f"wrote {len(trace)} samples to {out}")
    return EXIT_OK


# parser -----------------------------------------------------------------------


def _add_trace_args(p):
    p.add_argument("trace", nargs="?", help="trace file (CSV or JSON-lines)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="use a named synthetic workload instead of a file")
    p.add_argument("--trace-format", choices=("csv", "json-lines"), default=None)
    p.add_argument("--seed", type=int, default=0, help="preset seed (default 0)")
    p.add_argument("--noise", type=float, default=0.01, help="preset jitter fraction (default 0.01)")


def _add_policy_args(p):
    p.add_argument("--limit", type=_byte_arg, help="static policy limit")
    p.add_argument("--initial-rec", type=_byte_arg, help="VPA initial recommendation (default 1.2 x first sample)")
    p.add_argument("--initial-limit", type=_byte_arg, help="ARC-V starting limit (default 1.2 x expected peak)")
    p.add_argument("--expected-peak", type=_byte_arg, help="ARC-V expected peak (default: trace peak)")
    g = p.add_argument_group("ARC-V parameters")
    for f in dataclasses.fields(ArcvConfig):
        g.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=int if f.type in (int, "int") else float,
                       default=None, help=f"default {f.default}")
    m = p.add_argument_group("enforcement and swap")
    m.add_argument("--sync-delay", type=float, default=None, help="seconds before a patch takes effect (default 10)")
    m.add_argument("--no-downward-block", dest="downward_sync_blocks", action="store_const", const=False,
                   default=None, help="let patches below usage take effect immediately")
    m.add_argument("--no-swap", dest="swap_enabled", action="store_const", const=False, default=None)
    m.add_argument("--swap-slowdown", type=float, default=None, help="seconds per byte-second of swap")
    m.add_argument("--swap-capacity", type=_byte_arg, default=None)
    m.add_argument("--node-memory", type=_byte_arg, default=None, help="warn when a limit exceeds this")


def _add_output_args(p, stem=False):
    p.add_argument("--out", default="out", help="output directory (default ./out)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-plot", dest="plot", action="store_false", help="skip the PNG figure")
    if stem:
        p.add_argument("--stem", default="comparison", help="output file stem")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vscale", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="label a trace Growth (G) or Dynamic (D)")
    _add_trace_args(p)
    p.add_argument("--band", type=float, default=0.02)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="replay one policy over a trace")
    _add_trace_args(p)
    p.add_argument("--policy", default="arcv", choices=("arcv", "vpa", "vpa-sim", "static"))
    _add_policy_args(p)
    _add_output_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="replay several policies and report ratios")
    p.add_argument("--trace", dest="trace", help="trace file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--trace-format", choices=("csv", "json-lines"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("policies", nargs="*", help="policies in order; later ones are reported relative to earlier")
    p.add_argument("--result", action="append", default=[], help="saved simulate JSON result to include")
    _add_policy_args(p)
    _add_output_args(p, stem=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen", help="write a synthetic trace")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--family", choices=[f.value for f in Family])
    p.add_argument("--peak", type=_byte_arg)
    p.add_argument("--duration", type=float)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--interval", type=float, default=5.0)
    p.add_argument("--format", choices=("csv", "json-lines"), default="csv")
    p.add_argument("-o", "--output", default="trace.csv")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
