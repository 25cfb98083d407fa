"""Scenario configuration: YAML loading, validation, and the bundled scenarios.

Validation errors carry the dotted path of the offending field, e.g.
``sensors[1].priority_set``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .model import IntervalParams, RadioProfile, ReliabilityPolicy, ReliabilityTier, SensorSpec
from .priority import Bands, FavorabilityTable, Impact, Weights


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Regime:
    mean: float
    sd: float


@dataclass(frozen=True)
class ReadingModel:
    channel: str
    regimes: dict[str, Regime]
    fluctuation_channel: str | None = None
    lower: float = -math.inf
    upper: float = math.inf


@dataclass(frozen=True)
class Segment:
    start: float  # s
    end: float  # s
    noise_floor: float  # dBm
    readings: dict[str, str] = field(default_factory=dict)  # sensor name -> regime
    environment: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class MacConfig:
    buffer_bytes: int = 1024 * 1024
    polling_pkt_bytes: int = 10
    probe_packets: int = 2
    control_pkt_bytes: int = 10
    control_rate: float = 1.0  # packets/s
    aware_pkt_bytes: int = 16
    aware_budget_rate: float = 2.0  # packets/s reserved for fault-related info
    ewma_alpha: float = 0.5


@dataclass(frozen=True)
class PriorityConfig:
    theta: float = 0.4
    lambda_ms: float = 10_000.0
    lambda_overrides: dict[str, dict[int, float]] = field(default_factory=dict)  # sensor name -> p -> ms
    tick_ms: float = 1000.0
    weights: Weights = Weights()


@dataclass(frozen=True)
class RuntimeInfoConfig:
    buffer_warn: float = 0.8
    buffer_critical: float = 0.9
    quality_alpha: float = 0.3
    battery_lifetime_s: float = 7 * 24 * 3600.0


@dataclass
class ScenarioConfig:
    name: str
    duration_s: float
    radio: RadioProfile
    interval: IntervalParams
    sensors: list[SensorSpec]
    schedule: list[Segment]
    readings: dict[str, ReadingModel]
    favorability: FavorabilityTable
    priority: PriorityConfig = PriorityConfig()
    mac: MacConfig = MacConfig()
    reliability: ReliabilityPolicy = ReliabilityPolicy()
    runtime: RuntimeInfoConfig = RuntimeInfoConfig()
    environment: dict[str, float] = field(default_factory=dict)
    shadowing_sigma: float = 4.0
    b_l: float = 0.6
    b_h: float = 0.9
    seed: int = 1
    scheme: str = "aftcs"
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def scenario_hash(self) -> str:
        """Hash of everything except seed and scheme."""
        body = {k: v for k, v in self.raw.items() if k not in ("seed", "scheme")}
        blob = json.dumps(body, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def periods(self) -> list[tuple[float, float]]:
        return [(s.start, s.end) for s in self.schedule]

    def sensor(self, name_or_id) -> SensorSpec:
        for s in self.sensors:
            if s.name == name_or_id or s.id == name_or_id:
                return s
        raise KeyError(name_or_id)


BUNDLED = ("paper_s5",)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"no bundled scenario {name!r}")
    return Path(str(resources.files("aftcs") / "scenarios" / f"{name}.yaml"))


def load_config(path: str | Path) -> ScenarioConfig:
    """Load a YAML scenario from disk, or a bundled one by bare name."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_path(str(path))
    try:
        text = p.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"YAML parse error: {exc}") from exc
    return parse_config(data)


def load_bundled(name: str = "paper_s5", **overrides) -> ScenarioConfig:
    data = yaml.safe_load(bundled_path(name).read_text())
    data.update(overrides)
    return parse_config(data)


# ---------------------------------------------------------------- parsing helpers


def _req(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected a mapping")
    if key not in d:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return d[key]


def _num(v, path: str, *, lo=None, hi=None, integer=False, strict_lo=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if lo is not None and (v < lo or (strict_lo and v == lo)):
        raise ConfigError(path, f"must be {'>' if strict_lo else '>='} {lo}")
    if hi is not None and v > hi:
        raise ConfigError(path, f"must be <= {hi}")
    return int(v) if integer else float(v)


def _opt(d: dict, key: str, default, path: str, **kw):
    if key not in d:
        return default
    return _num(d[key], f"{path}.{key}" if path else key, **kw)


def _wrap(path: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(path, str(exc)) from exc


def parse_config(data: Any) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("", "config root must be a mapping")
    raw = copy.deepcopy(data)

    name = str(data.get("name", "scenario"))
    duration = _num(_req(data, "duration_s", ""), "duration_s", lo=0)
    seed = _opt(data, "seed", 1, "", integer=True, lo=0)
    scheme = str(data.get("scheme", "aftcs"))
    if scheme not in ("aftcs", "baseline", "fixed_priority_baseline"):
        raise ConfigError("scheme", f"unknown scheme {scheme!r}")

    r = data.get("radio", {}) or {}
    radio = _wrap(
        "radio",
        RadioProfile,
        data_rate=_opt(r, "data_rate", 250_000.0, "radio", lo=0, strict_lo=True),
        max_frame=_opt(r, "max_frame", 127, "radio", integer=True, lo=1),
        phy_overhead=_opt(r, "phy_overhead", 6, "radio", integer=True, lo=0),
        mac_overhead=_opt(r, "mac_overhead", 13, "radio", integer=True, lo=0),
        ideal_noise_floor=_opt(r, "ideal_noise_floor", -100.0, "radio"),
        path_loss_exponent=_opt(r, "path_loss_exponent", 2.4, "radio", lo=0),
        tx_power=_opt(r, "tx_power", 0.0, "radio"),
        reference_loss=_opt(r, "reference_loss", 43.0, "radio"),
        turnaround_ms=_opt(r, "turnaround_ms", 0.192, "radio", lo=0),
    )
    sigma = _opt(data.get("channel", {}) or {}, "shadowing_sigma_db", 4.0, "channel", lo=0)

    iv = data.get("interval", {}) or {}
    interval = _wrap(
        "interval",
        IntervalParams.from_radio,
        radio,
        t_interval=_opt(iv, "t_interval_ms", 100.0, "interval", lo=0, strict_lo=True),
        t_min_pkt=_opt(iv, "t_min_pkt_ms", 5.0, "interval", lo=0, strict_lo=True),
        t_max_factor=_opt(iv, "t_max_factor", 4.0, "interval", lo=1),
    )

    m = data.get("mac", {}) or {}
    mac = MacConfig(
        buffer_bytes=_opt(m, "buffer_bytes", 1024 * 1024, "mac", integer=True, lo=1),
        polling_pkt_bytes=_opt(m, "polling_pkt_bytes", 10, "mac", integer=True, lo=1, hi=radio.max_payload),
        probe_packets=_opt(m, "probe_packets", 2, "mac", integer=True, lo=1),
        control_pkt_bytes=_opt(m, "control_pkt_bytes", 10, "mac", integer=True, lo=1, hi=radio.max_payload),
        control_rate=_opt(m, "control_rate", 1.0, "mac", lo=0),
        aware_pkt_bytes=_opt(m, "aware_pkt_bytes", 16, "mac", integer=True, lo=1, hi=radio.max_payload),
        aware_budget_rate=_opt(m, "aware_budget_rate", 2.0, "mac", lo=0),
        ewma_alpha=_opt(m, "ewma_alpha", 0.5, "mac", lo=0, hi=1, strict_lo=True),
    )
    if mac.probe_packets * interval.t_min_pkt + interval.t_max_pkt >= interval.t_interval:
        raise ConfigError("mac.probe_packets", "poll exchange does not fit in one interval")

    rel = data.get("reliability", {}) or {}
    tiers = {}
    for k, v in (rel.get("tiers", {}) or {}).items():
        tp = f"reliability.tiers.{k}"
        level = _num(k, tp, integer=True, lo=0, hi=6)
        tiers[level] = ReliabilityTier(
            extra_retries=_opt(v or {}, "extra_retries", 0, tp, integer=True, lo=0),
            extra_slots=_opt(v or {}, "extra_slots", 0, tp, integer=True, lo=0),
        )
    reliability = ReliabilityPolicy(
        base_retry_limit=_opt(rel, "retry_limit", 3, "reliability", integer=True, lo=0),
        tiers=tiers,
    )

    adm = data.get("admission", {}) or {}
    b_l = _opt(adm, "b_l", 0.6, "admission")
    b_h = _opt(adm, "b_h", 0.9, "admission")
    if not 0 < b_l < b_h < 1:
        raise ConfigError("admission", "need 0 < b_l < b_h < 1")

    sensors = _parse_sensors(_req(data, "sensors", ""), radio)
    names = {s.name for s in sensors}

    pr = data.get("priority", {}) or {}
    lam_over = {}
    for sname, table in (pr.get("lambda_overrides", {}) or {}).items():
        if sname not in names:
            raise ConfigError(f"priority.lambda_overrides.{sname}", "unknown sensor")
        lam_over[sname] = {
            _num(p, f"priority.lambda_overrides.{sname}", integer=True): _num(
                ms, f"priority.lambda_overrides.{sname}.{p}", lo=0
            )
            for p, ms in table.items()
        }
    weights = Weights(
        favorable=_opt(pr, "w_fav", 0.1, "priority", lo=0),
        unfavorable=_opt(pr, "w_unfav", 0.1, "priority", lo=0),
        per_channel={
            str(k): _num(v, f"priority.channel_weights.{k}", lo=0)
            for k, v in (pr.get("channel_weights", {}) or {}).items()
        },
    )
    priority = PriorityConfig(
        theta=_opt(pr, "theta", 0.4, "priority", lo=0, strict_lo=True),
        lambda_ms=_opt(pr, "lambda_ms", 10_000.0, "priority", lo=0),
        lambda_overrides=lam_over,
        tick_ms=_opt(pr, "tick_ms", 1000.0, "priority", lo=0, strict_lo=True),
        weights=weights,
    )
    if priority.tick_ms % interval.t_interval:
        raise ConfigError("priority.tick_ms", "must be a whole number of intervals")

    ri = data.get("runtime_info", {}) or {}
    runtime = RuntimeInfoConfig(
        buffer_warn=_opt(ri, "buffer_warn", 0.8, "runtime_info", lo=0, hi=1),
        buffer_critical=_opt(ri, "buffer_critical", 0.9, "runtime_info", lo=0, hi=1),
        quality_alpha=_opt(ri, "quality_alpha", 0.3, "runtime_info", lo=0, hi=1, strict_lo=True),
        battery_lifetime_s=_opt(ri, "battery_lifetime_s", 7 * 24 * 3600.0, "runtime_info", lo=0, strict_lo=True),
    )
    if runtime.buffer_warn > runtime.buffer_critical:
        raise ConfigError("runtime_info", "buffer_warn must not exceed buffer_critical")

    readings = _parse_readings(data.get("readings", {}) or {}, names)
    environment = {
        str(k): _num(v, f"environment.{k}") for k, v in (data.get("environment", {}) or {}).items()
    }
    schedule = _parse_schedule(_req(data, "schedule", ""), duration, radio, readings, names, environment)
    favorability = _parse_favorability(data.get("favorability", {}) or {}, sensors)

    channels = _emitted_channels(readings, environment)
    for ch in channels:
        if ch not in favorability.bands:
            raise ConfigError(f"favorability.bands.{ch}", "no category bands for an emitted channel")
    for kind, per_channel in favorability.entries.items():
        for ch in per_channel:
            if ch not in channels:
                raise ConfigError(f"favorability.tables.{kind}.{ch}", "unknown channel")

    return ScenarioConfig(
        name=name,
        duration_s=duration,
        radio=radio,
        interval=interval,
        sensors=sensors,
        schedule=schedule,
        readings=readings,
        favorability=favorability,
        priority=priority,
        mac=mac,
        reliability=reliability,
        runtime=runtime,
        environment=environment,
        shadowing_sigma=sigma,
        b_l=b_l,
        b_h=b_h,
        seed=seed,
        scheme="baseline" if scheme == "fixed_priority_baseline" else scheme,
        raw=raw,
    )


RUNTIME_CHANNELS = ("buffer_utilization", "residual_battery", "channel_quality")


def _emitted_channels(readings: dict[str, ReadingModel], environment: dict[str, float]) -> set[str]:
    out = set(RUNTIME_CHANNELS) | set(environment)
    for rm in readings.values():
        out.add(rm.channel)
        if rm.fluctuation_channel:
            out.add(rm.fluctuation_channel)
    return out


def _parse_sensors(items, radio: RadioProfile) -> list[SensorSpec]:
    if not isinstance(items, list) or not items:
        raise ConfigError("sensors", "expected a non-empty list")
    out: list[SensorSpec] = []
    seen_ids, seen_names = set(), set()
    for i, s in enumerate(items):
        path = f"sensors[{i}]"
        if not isinstance(s, dict):
            raise ConfigError(path, "expected a mapping")
        sid = _num(_req(s, "id", path), f"{path}.id", integer=True, lo=0)
        name = str(_req(s, "name", path))
        if sid in seen_ids:
            raise ConfigError(f"{path}.id", f"duplicate sensor id {sid}")
        if name in seen_names:
            raise ConfigError(f"{path}.name", f"duplicate sensor name {name}")
        seen_ids.add(sid)
        seen_names.add(name)
        pset = _req(s, "priority_set", path)
        if not isinstance(pset, list) or not pset:
            raise ConfigError(f"{path}.priority_set", "expected a non-empty list")
        payload = _num(_req(s, "payload_bytes", path), f"{path}.payload_bytes", integer=True, lo=1, hi=radio.max_payload)
        spec = _wrap(
            path,
            SensorSpec,
            id=sid,
            name=name,
            payload_size=payload,
            tx_rate=_num(_req(s, "rate_pps", path), f"{path}.rate_pps", lo=0),
            high_delay_sensitivity=bool(s.get("high_delay_sensitivity", False)),
            priority_set=frozenset(_num(p, f"{path}.priority_set", integer=True, lo=0, hi=6) for p in pset),
            initial_priority=_num(_req(s, "initial_priority", path), f"{path}.initial_priority", integer=True),
            k_min=_opt(s, "k_min", 0, path, integer=True, lo=0),
            kind=str(s.get("kind", name)),
            distance_m=_opt(s, "distance_m", 1.0, path, lo=0, strict_lo=True),
        )
        out.append(spec)
    return out


def _parse_readings(data: dict, names: set[str]) -> dict[str, ReadingModel]:
    out = {}
    for sname, rm in data.items():
        path = f"readings.{sname}"
        if sname not in names:
            raise ConfigError(path, "unknown sensor")
        regimes = {}
        for rname, reg in (_req(rm, "regimes", path) or {}).items():
            rp = f"{path}.regimes.{rname}"
            regimes[str(rname)] = Regime(
                mean=_num(_req(reg, "mean", rp), f"{rp}.mean"),
                sd=_num(reg.get("sd", 0.0), f"{rp}.sd", lo=0),
            )
        if "normal" not in regimes:
            raise ConfigError(f"{path}.regimes", "a 'normal' regime is required")
        out[sname] = ReadingModel(
            channel=str(_req(rm, "channel", path)),
            regimes=regimes,
            fluctuation_channel=rm.get("fluctuation_channel"),
            lower=_opt(rm, "lower", -math.inf, path),
            upper=_opt(rm, "upper", math.inf, path),
        )
    return out


def _parse_schedule(items, duration, radio, readings, names, environment) -> list[Segment]:
    if not isinstance(items, list):
        raise ConfigError("schedule", "expected a list of segments")
    segs = []
    cursor = 0.0
    for i, seg in enumerate(items):
        path = f"schedule[{i}]"
        start = _num(_req(seg, "start_s", path), f"{path}.start_s", lo=0)
        end = _num(_req(seg, "end_s", path), f"{path}.end_s", lo=0)
        if not math.isclose(start, cursor):
            raise ConfigError(f"{path}.start_s", f"segments must be contiguous (expected {cursor})")
        if end <= start:
            raise ConfigError(f"{path}.end_s", "must be after start_s")
        nf = _num(_req(seg, "noise_floor_dbm", path), f"{path}.noise_floor_dbm")
        if nf < radio.ideal_noise_floor:
            raise ConfigError(f"{path}.noise_floor_dbm", "below the ideal noise floor")
        regs = {}
        for sname, regime in (seg.get("readings", {}) or {}).items():
            if sname not in names:
                raise ConfigError(f"{path}.readings.{sname}", "unknown sensor")
            if sname not in readings or regime not in readings[sname].regimes:
                raise ConfigError(f"{path}.readings.{sname}", f"unknown regime {regime!r}")
            regs[sname] = str(regime)
        env = {}
        for k, v in (seg.get("environment", {}) or {}).items():
            if k not in environment:
                raise ConfigError(f"{path}.environment.{k}", "not declared in top-level environment")
            env[str(k)] = _num(v, f"{path}.environment.{k}")
        segs.append(Segment(start, end, nf, regs, env))
        cursor = end
    if duration > 0 and not math.isclose(cursor, duration):
        raise ConfigError("schedule", f"segments cover [0, {cursor}] but duration_s is {duration}")
    if duration == 0 and segs:
        raise ConfigError("schedule", "a zero-length run takes an empty schedule")
    return segs


def _parse_favorability(data: dict, sensors: list[SensorSpec]) -> FavorabilityTable:
    table = FavorabilityTable()
    for ch, spec in (data.get("bands", {}) or {}).items():
        path = f"favorability.bands.{ch}"
        names = _req(spec, "names", path)
        edges = [_num(e, f"{path}.edges") for e in (spec.get("edges", []) or [])]
        table.bands[str(ch)] = _wrap(path, Bands, tuple(str(n) for n in names), tuple(edges))
    kinds = {s.kind: s for s in sensors}
    for kind, per_channel in (data.get("tables", {}) or {}).items():
        if kind not in kinds:
            raise ConfigError(f"favorability.tables.{kind}", "no sensor of this kind")
        pset = kinds[kind].priority_set
        for ch, per_cat in (per_channel or {}).items():
            for cat, impacts in (per_cat or {}).items():
                path = f"favorability.tables.{kind}.{ch}.{cat}"
                row: dict[int, Impact] = {}
                for label, impact in (("favorable", Impact.FAVORABLE), ("unfavorable", Impact.UNFAVORABLE)):
                    for p in impacts.get(label, []) or []:
                        p = _num(p, f"{path}.{label}", integer=True)
                        if p not in pset:
                            raise ConfigError(f"{path}.{label}", f"priority {p} not in {kind}'s priority set")
                        if p in row:
                            raise ConfigError(path, f"priority {p} listed twice")
                        row[p] = impact
                if ch not in table.bands:
                    raise ConfigError(f"favorability.tables.{kind}.{ch}", "unknown channel (no bands)")
                _wrap(path, table.set, kind, str(ch), str(cat), row)
    return table
