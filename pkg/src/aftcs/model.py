"""Shared domain types: sensors, radio profile, interval timing, priority ordering.

Priorities are plain ints. A smaller value is a more important sensor, so the
"highest" priority in a set is its minimum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable

DEFAULT_LEVELS = 7  # priorities 0..6


class Ordering(enum.Enum):
    HIGHER = "higher"
    EQUAL = "equal"
    LOWER = "lower"


def check_priority(p: int, levels: int = DEFAULT_LEVELS) -> int:
    if isinstance(p, bool) or not isinstance(p, int) or not 0 <= p < levels:
        raise ValueError(f"priority {p!r} outside [0, {levels - 1}]")
    return p


def priority_order(a: int, b: int) -> Ordering:
    """Compare two priority levels; HIGHER means ``a`` is more important."""
    check_priority(a)
    check_priority(b)
    if a < b:
        return Ordering.HIGHER
    if a > b:
        return Ordering.LOWER
    return Ordering.EQUAL


def highest(priorities: Iterable[int]) -> int:
    return min(priorities)


def sensor_sort_key(priority: int, data_bw: float, sensor_id: int) -> tuple[int, float, int]:
    """Service order: priority first, then the smaller data reservation, then id."""
    return (priority, data_bw, sensor_id)


@dataclass(frozen=True)
class SensorSpec:
    id: int
    name: str
    payload_size: int
    tx_rate: float
    high_delay_sensitivity: bool
    priority_set: frozenset[int]
    initial_priority: int
    k_min: int = 0
    kind: str = ""  # favorability-table class; defaults to name
    distance_m: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "priority_set", frozenset(self.priority_set))
        if not self.kind:
            object.__setattr__(self, "kind", self.name)
        if not self.priority_set:
            raise ValueError(f"sensor {self.name}: empty priority set")
        for p in self.priority_set:
            check_priority(p)
        if self.initial_priority not in self.priority_set:
            raise ValueError(f"sensor {self.name}: initial priority not in priority set")
        if self.payload_size < 1:
            raise ValueError(f"sensor {self.name}: payload_size must be >= 1")
        if self.tx_rate < 0:
            raise ValueError(f"sensor {self.name}: tx_rate must be >= 0")
        if self.k_min < 0:
            raise ValueError(f"sensor {self.name}: k_min must be >= 0")
        if not self.high_delay_sensitivity and self.k_min != 0:
            raise ValueError(f"sensor {self.name}: k_min requires high delay sensitivity")
        if self.distance_m <= 0:
            raise ValueError(f"sensor {self.name}: distance must be positive")

    @property
    def priorities_desc(self) -> list[int]:
        """Priority set ordered most important first."""
        return sorted(self.priority_set)


@dataclass(frozen=True)
class RadioProfile:
    data_rate: float = 250_000.0  # bits/s
    max_frame: int = 127  # bytes
    phy_overhead: int = 6
    mac_overhead: int = 13
    ideal_noise_floor: float = -100.0  # dBm
    path_loss_exponent: float = 2.4
    tx_power: float = 0.0  # dBm
    reference_loss: float = 43.0  # dB at 1 m
    turnaround_ms: float = 0.192

    def __post_init__(self):
        if self.data_rate <= 0:
            raise ValueError("data_rate must be positive")
        if self.max_frame <= self.phy_overhead + self.mac_overhead:
            raise ValueError("max_frame must exceed phy + mac overhead")

    @property
    def overhead(self) -> int:
        return self.phy_overhead + self.mac_overhead

    @property
    def max_payload(self) -> int:
        return self.max_frame - self.overhead

    def frame_bytes(self, payload: int) -> int:
        if payload > self.max_payload:
            raise ValueError(f"payload {payload} exceeds max payload {self.max_payload}")
        return payload + self.overhead

    def airtime_ms(self, frame_bytes: int) -> float:
        return frame_bytes * 8 / self.data_rate * 1000.0


@dataclass(frozen=True)
class IntervalParams:
    t_interval: float  # ms
    n_pkt: int
    s_pkt: int  # bytes
    t_min_pkt: float  # ms
    t_max_pkt: float  # ms

    def __post_init__(self):
        if not 0 < self.t_min_pkt <= self.t_max_pkt < self.t_interval:
            raise ValueError("need 0 < t_min_pkt <= t_max_pkt < t_interval")
        if self.n_pkt < 0 or self.n_pkt * self.t_min_pkt > self.t_interval + 1e-9:
            raise ValueError("n_pkt * t_min_pkt must not exceed t_interval")

    @classmethod
    def from_radio(
        cls,
        radio: RadioProfile,
        t_interval: float = 100.0,
        t_min_pkt: float = 5.0,
        t_max_factor: float = 4.0,
    ) -> "IntervalParams":
        min_needed = radio.airtime_ms(radio.max_frame) + radio.turnaround_ms
        if t_min_pkt < min_needed:
            raise ValueError(f"t_min_pkt {t_min_pkt} ms shorter than a max frame ({min_needed:.3f} ms)")
        return cls(
            t_interval=t_interval,
            n_pkt=math.floor(t_interval / t_min_pkt + 1e-9),
            s_pkt=radio.max_payload,
            t_min_pkt=t_min_pkt,
            t_max_pkt=t_min_pkt * t_max_factor,
        )


@dataclass(frozen=True)
class ReliabilityTier:
    """Extra ARQ persistence and reserved slots granted at a priority level."""

    extra_retries: int = 0
    extra_slots: int = 0


@dataclass(frozen=True)
class ReliabilityPolicy:
    base_retry_limit: int = 3
    tiers: dict[int, ReliabilityTier] = field(default_factory=dict)

    def tier(self, priority: int) -> ReliabilityTier:
        return self.tiers.get(priority, ReliabilityTier())

    def retry_limit(self, priority: int) -> int:
        return self.base_retry_limit + self.tier(priority).extra_retries

    def extra_slots(self, priority: int) -> int:
        return self.tier(priority).extra_slots
