"""Multi-seed AFTCS vs baseline comparison focused on each period's top sensor."""

from __future__ import annotations

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .config import ScenarioConfig
from .metrics import MetricsReport
from .sim import SchemeKind, run_scenario


@dataclass
class TopSensorRow:
    seed: int
    period: int
    sensor: str
    loss_aftcs: float | None
    loss_baseline: float | None
    latency_aftcs: float | None
    latency_baseline: float | None


@dataclass
class BatchSummary:
    seeds: list[int]
    rows: list[TopSensorRow] = field(default_factory=list)

    def mean(self, period: int, attr: str) -> float:
        vals = [getattr(r, attr) for r in self.rows if r.period == period and getattr(r, attr) is not None]
        return statistics.fmean(vals) if vals else float("nan")

    def table(self) -> list[dict]:
        periods = sorted({r.period for r in self.rows})
        out = []
        for p in periods:
            tops = sorted({r.sensor for r in self.rows if r.period == p})
            out.append({
                "period": p,
                "top_sensors": tops,
                "loss_aftcs": self.mean(p, "loss_aftcs"),
                "loss_baseline": self.mean(p, "loss_baseline"),
                "latency_aftcs_ms": self.mean(p, "latency_aftcs"),
                "latency_baseline_ms": self.mean(p, "latency_baseline"),
            })
        return out


def run_pair(cfg: ScenarioConfig, seed: int) -> tuple[MetricsReport, MetricsReport]:
    a = run_scenario(cfg, SchemeKind.AFTCS, seed).report
    b = run_scenario(cfg, SchemeKind.BASELINE, seed).report
    return a, b


def _rows_for_seed(args) -> list[TopSensorRow]:
    cfg, seed, periods = args
    a, b = run_pair(cfg, seed)
    rows = []
    for p in periods:
        top = a.top_sensor(p)
        if top is None:
            continue
        ra, rb = a.row(top, p), b.row(top, p)
        rows.append(TopSensorRow(seed, p, top, ra.loss_rate, rb.loss_rate, ra.avg_latency_ms, rb.avg_latency_ms))
    return rows


def compare_top_sensors(
    cfg: ScenarioConfig,
    seeds: list[int],
    periods: tuple[int, ...] | None = None,
    workers: int = 1,
) -> BatchSummary:
    periods = periods or tuple(range(1, len(cfg.schedule) + 1))
    jobs = [(cfg, s, periods) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_rows_for_seed, jobs))
    else:
        chunks = [_rows_for_seed(j) for j in jobs]
    summary = BatchSummary(list(seeds))
    for c in chunks:
        summary.rows.extend(c)
    return summary
