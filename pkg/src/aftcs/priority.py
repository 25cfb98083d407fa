"""Dynamic fault-tolerant priority management.

Each sensor keeps one tuner per member of its priority set. Fault-related
readings are classified against a favorability table, summed into per-priority
adjustment factors, and accumulated into the tuners once per tick. When a
non-current tuner reaches the activation threshold the most important such
priority becomes current and every tuner resets to zero. A freshly activated
priority is held for its acquiescence window, during which tuners stay at zero.
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .model import SensorSpec, sensor_sort_key


class Kind(str, enum.Enum):
    BIO = "bio"
    ENVIRONMENTAL = "environmental"
    RUNTIME = "runtime"


class Impact(str, enum.Enum):
    FAVORABLE = "favorable"
    UNFAVORABLE = "unfavorable"
    NEUTRAL = "neutral"


class UnknownChannel(KeyError):
    pass


@dataclass(frozen=True)
class FaultInfo:
    kind: Kind
    channel_name: str
    value: float
    timestamp: float  # ms
    sensor: int | None = None  # None: applies to every sensor


@dataclass(frozen=True)
class Bands:
    """Partition of the real line into named categories.

    ``edges[i]`` is the exclusive upper bound of ``names[i]``; the last
    category is unbounded above.
    """

    names: tuple[str, ...]
    edges: tuple[float, ...]

    def __post_init__(self):
        if len(self.names) != len(self.edges) + 1:
            raise ValueError("need exactly one more category name than edges")
        if list(self.edges) != sorted(self.edges):
            raise ValueError("band edges must be ascending")

    def category(self, value: float) -> str:
        return self.names[bisect.bisect_right(self.edges, value)]


@dataclass
class FavorabilityTable:
    """Per (sensor class, channel, category, priority) impact lookup."""

    bands: dict[str, Bands] = field(default_factory=dict)
    # kind -> channel -> category -> priority -> Impact
    entries: dict[str, dict[str, dict[str, dict[int, Impact]]]] = field(default_factory=dict)

    def set(self, kind: str, channel: str, category: str, impacts: Mapping[int, Impact | str]):
        if channel not in self.bands:
            raise UnknownChannel(channel)
        if category not in self.bands[channel].names:
            raise ValueError(f"channel {channel!r} has no category {category!r}")
        row = self.entries.setdefault(kind, {}).setdefault(channel, {}).setdefault(category, {})
        for p, impact in impacts.items():
            row[int(p)] = Impact(impact)

    def lookup(self, kind: str, channel: str, category: str, p: int) -> Impact:
        return self.entries.get(kind, {}).get(channel, {}).get(category, {}).get(p, Impact.NEUTRAL)


def classify_reading(table: FavorabilityTable, kind: str, info: FaultInfo, p: int) -> Impact:
    bands = table.bands.get(info.channel_name)
    if bands is None:
        raise UnknownChannel(info.channel_name)
    return table.lookup(kind, info.channel_name, bands.category(info.value), p)


@dataclass(frozen=True)
class Weights:
    favorable: float = 0.1
    unfavorable: float = 0.1
    per_channel: Mapping[str, float] = field(default_factory=dict)

    def scale(self, channel: str) -> float:
        return self.per_channel.get(channel, 1.0)


def adjustment_factor(classifications: Iterable[Impact], weights: Weights = Weights()) -> float:
    delta = 0.0
    for c in classifications:
        if c is Impact.FAVORABLE:
            delta += weights.favorable
        elif c is Impact.UNFAVORABLE:
            delta -= weights.unfavorable
    return delta


def adjustment_factors(
    table: FavorabilityTable,
    spec: SensorSpec,
    infos: Sequence[FaultInfo],
    weights: Weights = Weights(),
) -> dict[int, float]:
    """Per-priority adjustment factors for one sensor and one tick."""
    out = {}
    for p in spec.priority_set:
        delta = 0.0
        for info in infos:
            c = classify_reading(table, spec.kind, info, p)
            delta += adjustment_factor([c], weights) * weights.scale(info.channel_name)
        out[p] = delta
    return out


@dataclass(frozen=True)
class PriorityState:
    sensor: int
    current: int
    tuners: Mapping[int, float]
    activation_time: float  # ms
    lam: Mapping[int, float]  # acquiescence window per priority, ms
    theta: float

    def __post_init__(self):
        if self.current not in self.tuners:
            raise ValueError("current priority must be in the priority set")
        if set(self.lam) != set(self.tuners):
            raise ValueError("acquiescence windows must cover the priority set")

    @classmethod
    def initial(
        cls,
        spec: SensorSpec,
        theta: float = 0.4,
        lam: float | Mapping[int, float] = 10_000.0,
        t: float = 0.0,
    ) -> "PriorityState":
        if isinstance(lam, Mapping):
            lam_map = {p: float(lam.get(p, 10_000.0)) for p in spec.priority_set}
        else:
            lam_map = {p: float(lam) for p in spec.priority_set}
        return cls(
            sensor=spec.id,
            current=spec.initial_priority,
            tuners={p: 0.0 for p in spec.priority_set},
            activation_time=t,
            lam=lam_map,
            theta=theta,
        )

    @property
    def priority_set(self) -> frozenset[int]:
        return frozenset(self.tuners)


def acquiescence(state: PriorityState, p: int, t: float) -> int:
    """1 while ``p`` is still inside its hold window after activation."""
    return 1 if (t - state.activation_time) < state.lam[p] else 0


def step_tuners(state: PriorityState, deltas: Mapping[int, float], t: float) -> PriorityState:
    if acquiescence(state, state.current, t):
        tuners = {p: 0.0 for p in state.tuners}
    else:
        tuners = {p: m + deltas[p] for p, m in state.tuners.items()}
    return replace(state, tuners=tuners)


def try_activate(state: PriorityState, t: float) -> tuple[PriorityState, int | None]:
    candidates = [p for p, m in state.tuners.items() if p != state.current and m >= state.theta]
    if not candidates:
        return state, None
    winner = min(candidates)
    return (
        replace(state, current=winner, activation_time=t, tuners={p: 0.0 for p in state.tuners}),
        winner,
    )


def build_priority_queue(states: Iterable[PriorityState], bandwidth_shares: Mapping[int, float]) -> list[int]:
    return [
        s.sensor
        for s in sorted(states, key=lambda s: sensor_sort_key(s.current, bandwidth_shares.get(s.sensor, 0.0), s.sensor))
    ]
