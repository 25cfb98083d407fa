"""Synthetic fault-related information: bio readings, environment, runtime state."""

from __future__ import annotations

import math
from typing import Mapping

from .config import ScenarioConfig, Segment
from .priority import FaultInfo, Kind
from .rng import substream


def segment_at(schedule: list[Segment], t_s: float) -> Segment:
    for seg in schedule:
        if seg.start <= t_s < seg.end:
            return seg
    if schedule and t_s >= schedule[-1].end:
        return schedule[-1]
    raise ValueError(f"time {t_s} s outside the schedule")


class ReadingSource:
    """Draws each sensor's bio reading from the regime active at time t."""

    def __init__(self, cfg: ScenarioConfig, seed: int):
        self.cfg = cfg
        self._rng = {s.name: substream(seed, s.id, "reading") for s in cfg.sensors}
        self._prev: dict[str, float] = {}

    def regime(self, sensor_name: str, t_s: float) -> str:
        return segment_at(self.cfg.schedule, t_s).readings.get(sensor_name, "normal")

    def draw(self, t_ms: float) -> list[FaultInfo]:
        out = []
        t_s = t_ms / 1000.0
        for spec in self.cfg.sensors:
            model = self.cfg.readings.get(spec.name)
            if model is None:
                continue
            reg = model.regimes[self.regime(spec.name, t_s)]
            value = self._rng[spec.name].gauss(reg.mean, reg.sd)
            value = min(max(value, model.lower), model.upper)
            out.append(FaultInfo(Kind.BIO, model.channel, value, t_ms, spec.id))
            if model.fluctuation_channel:
                prev = self._prev.get(spec.name, value)
                out.append(FaultInfo(Kind.BIO, model.fluctuation_channel, abs(value - prev), t_ms, spec.id))
            self._prev[spec.name] = value
        return out


def battery_level(cfg: ScenarioConfig, t_ms: float) -> float:
    return max(0.0, 1.0 - t_ms / 1000.0 / cfg.runtime.battery_lifetime_s)


def generate_fault_info(
    cfg: ScenarioConfig,
    t_ms: float,
    source: ReadingSource,
    buffer_utilization: Mapping[int, float],
    channel_quality: float | None,
) -> list[FaultInfo]:
    """All fault-related information observed at one tick."""
    infos = source.draw(t_ms)
    seg = segment_at(cfg.schedule, t_ms / 1000.0)
    for name, default in cfg.environment.items():
        infos.append(FaultInfo(Kind.ENVIRONMENTAL, name, seg.environment.get(name, default), t_ms))
    battery = battery_level(cfg, t_ms)
    for spec in cfg.sensors:
        infos.append(FaultInfo(Kind.RUNTIME, "buffer_utilization", buffer_utilization.get(spec.id, 0.0), t_ms, spec.id))
        infos.append(FaultInfo(Kind.RUNTIME, "residual_battery", battery, t_ms, spec.id))
    if channel_quality is not None and math.isfinite(channel_quality):
        infos.append(FaultInfo(Kind.RUNTIME, "channel_quality", channel_quality, t_ms))
    return infos


def infos_for(infos: list[FaultInfo], sensor: int) -> list[FaultInfo]:
    return [i for i in infos if i.sensor is None or i.sensor == sensor]
