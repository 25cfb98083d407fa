"""Command-line entry point: run, compare, validate, replay."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_config
from .metrics import (
    MetricsReport,
    MismatchError,
    TraceError,
    compare_runs,
    compute_metrics,
    read_trace,
    render_metrics_csv,
    write_bandwidth_csv,
    write_comparison_csv,
    write_metrics_csv,
    write_priority_csv,
    write_summary,
    write_trace,
)
from .sim import SchemeKind, run_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BAD_PATH = 3
EXIT_SCHEMA = 4
EXIT_WRITE = 5
EXIT_TRACE = 6
EXIT_MISMATCH = 7

U64_MAX = 2**64 - 1


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError(f"seed out of u64 range: {v}")
    return v


def _load(path: str) -> ScenarioConfig:
    try:
        return load_config(path)
    except FileNotFoundError as exc:
        raise CliError(EXIT_BAD_PATH, str(exc))
    except ConfigError as exc:
        raise CliError(EXIT_SCHEMA, f"invalid config {path}: {exc}")


def _outdir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_WRITE, f"cannot create output directory {out}: {exc}")
    return out


def write_run_outputs(out: Path, trace: list[dict], report: MetricsReport) -> None:
    try:
        write_trace(out / "trace.jsonl", trace)
        write_metrics_csv(out / "metrics.csv", report)
        write_priority_csv(out / "priority_trace.csv", report)
        write_bandwidth_csv(out / "bandwidth_trace.csv", report)
        write_summary(out / "summary.json", report)
    except OSError as exc:
        raise CliError(EXIT_WRITE, f"write failed under {out}: {exc}")


def cmd_run(args) -> int:
    cfg = _load(args.config)
    res = run_scenario(cfg, args.scheme, args.seed)
    out = _outdir(args.out)
    write_run_outputs(out, res.trace, res.report)
    print(f"{res.scheme.value} seed={res.seed} -> {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args.config)
    out = _outdir(args.out)
    reports = {}
    for scheme, sub in ((SchemeKind.AFTCS, "aftcs"), (SchemeKind.BASELINE, "baseline")):
        res = run_scenario(cfg, scheme, args.seed)
        write_run_outputs(_outdir(str(out / sub)), res.trace, res.report)
        reports[sub] = res.report
    try:
        rows = compare_runs(reports["aftcs"], reports["baseline"])
    except MismatchError as exc:
        raise CliError(EXIT_MISMATCH, str(exc))
    try:
        write_comparison_csv(out / "comparison.csv", rows)
    except OSError as exc:
        raise CliError(EXIT_WRITE, f"write failed: {exc}")
    print(f"{len(rows)} rows -> {out / 'comparison.csv'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    print(f"ok: {cfg.name} ({len(cfg.sensors)} sensors, {len(cfg.schedule)} periods, hash {cfg.scenario_hash})")
    return EXIT_OK


def cmd_replay(args) -> int:
    path = Path(args.trace)
    if not path.is_file():
        raise CliError(EXIT_BAD_PATH, f"no such trace: {path}")
    try:
        report = compute_metrics(read_trace(path))
    except (TraceError, KeyError, TypeError) as exc:
        raise CliError(EXIT_TRACE, f"bad trace {path}: {exc}")
    reference = Path(args.metrics) if args.metrics else path.with_name("metrics.csv")
    if args.out:
        out = _outdir(args.out)
        try:
            write_metrics_csv(out / "metrics.csv", report)
            write_priority_csv(out / "priority_trace.csv", report)
            write_bandwidth_csv(out / "bandwidth_trace.csv", report)
            write_summary(out / "summary.json", report)
        except OSError as exc:
            raise CliError(EXIT_WRITE, f"write failed under {out}: {exc}")
    if reference.is_file():
        tmp = render_metrics_csv(report)
        with open(reference) as f:
            if f.read() != tmp:
                raise CliError(EXIT_MISMATCH, f"recomputed metrics differ from {reference}")
        print(f"ok: metrics match {reference}")
    else:
        print(f"recomputed {len(report.rows)} rows (no metrics.csv to check against)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aftcs", description="Adaptive fault-tolerant BSN communication simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scheme and write reports")
    r.add_argument("--config", required=True, help="scenario YAML (or bundled name, e.g. paper_s5)")
    r.add_argument("--scheme", choices=["aftcs", "baseline"], default="aftcs")
    r.add_argument("--seed", type=_seed, required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run both schemes on one seed and tabulate deltas")
    c.add_argument("--config", required=True)
    c.add_argument("--seed", type=_seed, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_validate)

    y = sub.add_parser("replay", help="recompute metrics from an event trace")
    y.add_argument("--trace", required=True)
    y.add_argument("--metrics", help="metrics.csv to check against (default: next to the trace)")
    y.add_argument("--out", help="write recomputed reports here")
    y.set_defaults(func=cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"aftcs: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
