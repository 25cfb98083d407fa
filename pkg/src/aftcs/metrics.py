"""Per-sensor, per-period metrics from an event trace, plus CSV/JSON writers."""

from __future__ import annotations

import csv
import io
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

NA = "NA"
DROP_KINDS = ("dropped_channel", "dropped_buffer", "dropped_retry_limit")


class TraceError(ValueError):
    """Unreadable or incomplete trace."""


class MismatchError(ValueError):
    """Two reports do not describe the same scenario and seed."""


@dataclass
class PeriodMetrics:
    sensor: str
    period: int  # 1-based
    generated: int = 0
    delivered: int = 0
    dropped: dict[str, int] = field(default_factory=dict)
    queued: int = 0
    latency_sum: float = 0.0

    @property
    def loss_rate(self) -> float | None:
        return None if self.generated == 0 else 1.0 - self.delivered / self.generated

    @property
    def avg_latency_ms(self) -> float | None:
        return None if self.delivered == 0 else self.latency_sum / self.delivered


@dataclass
class MetricsReport:
    scenario_hash: str
    seed: int
    scheme: str
    periods: list[tuple[float, float]]
    sensors: dict[int, str]
    rows: list[PeriodMetrics]
    priority_trace: list[tuple[float, str, int, int]]  # t_s, sensor, priority, rank
    bandwidth_trace: list[tuple[float, float]]  # t_s, bits/s

    def row(self, sensor: str, period: int) -> PeriodMetrics:
        for r in self.rows:
            if r.sensor == sensor and r.period == period:
                return r
        raise KeyError((sensor, period))

    def top_sensor(self, period: int) -> str | None:
        """Sensor most often at rank 0 during the period (ties: earliest in queue order)."""
        start, end = self.periods[period - 1]
        counts = Counter(s for t, s, _, rank in self.priority_trace if rank == 0 and start <= t < end)
        if not counts:
            return None
        best = max(counts.values())
        for t, s, _, rank in self.priority_trace:
            if rank == 0 and start <= t < end and counts[s] == best:
                return s
        return None

    def priority_at(self, sensor: str, t_s: float) -> int:
        """Last sampled priority at or before t_s."""
        last = None
        for t, s, p, _ in self.priority_trace:
            if s != sensor:
                continue
            if t > t_s:
                break
            last = p
        if last is None:
            raise KeyError((sensor, t_s))
        return last

    def to_dict(self) -> dict:
        return {
            "scenario_hash": self.scenario_hash,
            "seed": self.seed,
            "scheme": self.scheme,
            "periods": [list(p) for p in self.periods],
            "metrics": [
                {
                    "sensor": r.sensor,
                    "period": r.period,
                    "generated": r.generated,
                    "delivered": r.delivered,
                    "queued": r.queued,
                    "dropped": dict(sorted(r.dropped.items())),
                    "loss_rate": r.loss_rate,
                    "avg_latency_ms": r.avg_latency_ms,
                }
                for r in self.rows
            ],
            "top_sensor": {str(i + 1): self.top_sensor(i + 1) for i in range(len(self.periods))},
        }


def _period_index(periods: list[tuple[float, float]], t_s: float) -> int:
    for i, (a, b) in enumerate(periods):
        if a <= t_s < b:
            return i + 1
    return len(periods) if periods and t_s >= periods[-1][1] else 0


def compute_metrics(trace: Iterable[dict], periods: list[tuple[float, float]] | None = None) -> MetricsReport:
    events = list(trace)
    if not events or events[0].get("ev") != "header":
        raise TraceError("trace has no header record")
    if events[-1].get("ev") != "end":
        raise TraceError("trace is truncated (no end record)")
    head = events[0]
    periods = [tuple(p) for p in (periods if periods is not None else head["periods"])]
    sensors = {int(k): v for k, v in head["sensors"].items()}
    rows = {(name, i + 1): PeriodMetrics(name, i + 1) for name in sensors.values() for i in range(len(periods))}
    prio, bw = [], []
    for ev in events[1:-1]:
        kind = ev["ev"]
        if kind == "pkt":
            period = _period_index(periods, ev["enq"] / 1000.0)
            if period == 0:
                continue
            row = rows[(sensors[ev["s"]], period)]
            row.generated += 1
            out = ev["out"]
            if out == "delivered":
                row.delivered += 1
                row.latency_sum += ev["dlv"] - ev["enq"]
            elif out == "queued":
                row.queued += 1
            else:
                row.dropped[out] = row.dropped.get(out, 0) + 1
        elif kind == "prio":
            prio.append((ev["t"] / 1000.0, sensors[ev["s"]], ev["p"], ev["rank"]))
        elif kind == "bw":
            bw.append((ev["t"] / 1000.0, ev["bw"]))
    return MetricsReport(
        scenario_hash=head["scenario_hash"],
        seed=head["seed"],
        scheme=head["scheme"],
        periods=periods,
        sensors=sensors,
        rows=list(rows.values()),
        priority_trace=prio,
        bandwidth_trace=bw,
    )


@dataclass
class ComparisonRow:
    sensor: str
    period: int
    loss_a: float | None
    loss_b: float | None
    latency_a: float | None
    latency_b: float | None
    top: bool  # highest-priority sensor of the period in report a

    @property
    def loss_delta(self) -> float | None:
        return None if self.loss_a is None or self.loss_b is None else self.loss_a - self.loss_b

    @property
    def latency_delta(self) -> float | None:
        return None if self.latency_a is None or self.latency_b is None else self.latency_a - self.latency_b


def compare_runs(a: MetricsReport, b: MetricsReport) -> list[ComparisonRow]:
    if a.scenario_hash != b.scenario_hash:
        raise MismatchError(f"scenario hashes differ: {a.scenario_hash} vs {b.scenario_hash}")
    if a.seed != b.seed:
        raise MismatchError(f"seeds differ: {a.seed} vs {b.seed}")
    out = []
    for ra in a.rows:
        rb = b.row(ra.sensor, ra.period)
        out.append(ComparisonRow(
            ra.sensor, ra.period, ra.loss_rate, rb.loss_rate, ra.avg_latency_ms, rb.avg_latency_ms,
            top=a.top_sensor(ra.period) == ra.sensor,
        ))
    return out


# ---------------------------------------------------------------- file formats


def _fmt(x) -> str:
    if x is None:
        return NA
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def write_trace(path: Path, events: list[dict]) -> None:
    with open(path, "w") as f:
        for ev in events:
            f.write(json.dumps(ev, separators=(",", ":")))
            f.write("\n")


def read_trace(path: Path) -> list[dict]:
    events = []
    with open(path) as f:
        for n, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise TraceError(f"{path}:{n}: {exc}") from exc
    return events


def render_metrics_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sensor", "period", "loss_rate", "avg_latency_ms", "generated", "delivered"])
    for r in report.rows:
        w.writerow([r.sensor, r.period, _fmt(r.loss_rate), _fmt(r.avg_latency_ms), r.generated, r.delivered])
    return buf.getvalue()


def write_metrics_csv(path: Path, report: MetricsReport) -> None:
    with open(path, "w", newline="") as f:
        f.write(render_metrics_csv(report))


def write_priority_csv(path: Path, report: MetricsReport) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t_s", "sensor", "priority", "rank"])
        for t, s, p, rank in report.priority_trace:
            w.writerow([_fmt(float(t)), s, p, rank])


def write_bandwidth_csv(path: Path, report: MetricsReport) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t_s", "bw_effective_bps"])
        for t, bw in report.bandwidth_trace:
            w.writerow([_fmt(float(t)), _fmt(float(bw))])


def write_comparison_csv(path: Path, rows: list[ComparisonRow]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([
            "sensor", "period", "top", "loss_aftcs", "loss_baseline", "loss_delta",
            "latency_aftcs_ms", "latency_baseline_ms", "latency_delta_ms",
        ])
        for r in rows:
            w.writerow([
                r.sensor, r.period, int(r.top), _fmt(r.loss_a), _fmt(r.loss_b), _fmt(r.loss_delta),
                _fmt(r.latency_a), _fmt(r.latency_b), _fmt(r.latency_delta),
            ])


def read_metrics_csv(path: Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def write_summary(path: Path, report: MetricsReport, extra: dict | None = None) -> None:
    body = report.to_dict()
    if extra:
        body.update(extra)
    with open(path, "w") as f:
        json.dump(body, f, indent=2, sort_keys=True)
        f.write("\n")


def drop_totals(report: MetricsReport) -> dict[str, dict[str, int]]:
    out: dict[str, dict[str, int]] = defaultdict(lambda: {k: 0 for k in DROP_KINDS})
    for r in report.rows:
        for k, v in r.dropped.items():
            out[r.sensor][k] += v
    return dict(out)
