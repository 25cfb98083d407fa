"""Effective bandwidth from polling exchanges, ideal bandwidth, smoothing.

All bandwidths are bits per second; sizes are bytes and times milliseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .model import IntervalParams


class InvalidSample(ValueError):
    pass


class NoEstimate(ValueError):
    pass


@dataclass(frozen=True)
class PollExchange:
    sensor: int
    size_pkt: int
    size_polling_pkt: int
    t_wait: float  # ms
    n_received: int
    t_i: float  # ms
    d_i: int
    t_max_pkt: float  # ms

    @property
    def loss_deadline(self) -> float:
        return self.t_i * self.d_i + self.t_max_pkt


@dataclass(frozen=True)
class BandwidthSample:
    bw_effective: float
    timestamp: float
    poll_lost: bool


def measure_effective_bandwidth(x: PollExchange, timestamp: float = 0.0) -> BandwidthSample:
    if x.t_wait <= 0:
        raise InvalidSample(f"t_wait must be positive, got {x.t_wait}")
    if x.n_received < 0 or x.n_received > x.d_i:
        raise InvalidSample(f"n_received {x.n_received} outside [0, {x.d_i}]")
    bits = 8 * (x.size_pkt * x.n_received + x.size_polling_pkt)
    lost = x.n_received == 0 and math.isclose(x.t_wait, x.loss_deadline, rel_tol=1e-12, abs_tol=1e-12)
    return BandwidthSample(bw_effective=bits / (x.t_wait / 1000.0), timestamp=timestamp, poll_lost=lost)


def ideal_bandwidth(p: IntervalParams) -> float:
    return p.n_pkt * p.s_pkt * 8 / (p.t_interval / 1000.0)


def smooth_samples(history: Sequence[BandwidthSample], alpha: float = 0.5) -> float:
    """Exponentially weighted average; lost polls count as zero."""
    if not history:
        raise NoEstimate("no bandwidth samples")
    ewma = Ewma(alpha)
    for s in history:
        ewma.add(s)
    return ewma.value


class Ewma:
    def __init__(self, alpha: float = 0.5):
        if not 0 < alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        self.alpha = alpha
        self._value: float | None = None

    def add(self, sample: BandwidthSample) -> float:
        x = 0.0 if sample.poll_lost else sample.bw_effective
        self._value = x if self._value is None else self.alpha * x + (1 - self.alpha) * self._value
        return self._value

    @property
    def value(self) -> float:
        if self._value is None:
            raise NoEstimate("no bandwidth samples")
        return self._value

    @property
    def ready(self) -> bool:
        return self._value is not None
