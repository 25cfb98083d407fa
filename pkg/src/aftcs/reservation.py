"""Bandwidth reservation control over priority heaps.

``ReservationQueues`` keeps the reserved sensors in a heap whose top is the
least important reservation (the next eviction victim) and the removed sensors
in a heap whose top is the most important one (the next re-admission
candidate). ``admit`` implements the three-band decision; ``re_reservation_scan``
re-submits removed sensors after a relevant state change.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .heap import CountingHeap
from .model import IntervalParams, SensorSpec, sensor_sort_key


class ChannelDead(ValueError):
    """Effective bandwidth is zero; reserved traffic is suspended."""


class Decision(str, enum.Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"


class Trigger(str, enum.Enum):
    INITIAL = "initial"
    PRIORITY_RAISED = "priority_raised"
    RESERVED_PRIORITY_LOWERED = "reserved_priority_lowered"
    REQUIREMENT_REDUCED = "requirement_reduced"
    EFFECTIVE_BW_INCREASED = "effective_bw_increased"


@dataclass(frozen=True)
class SlotAllocation:
    sensor: int
    t_i: float  # ms per packet
    d_i: int  # packets per interval

    @property
    def window(self) -> float:
        return self.t_i * self.d_i


@dataclass(frozen=True)
class Reservation:
    """A sensor's entry in the reservation heaps."""

    sensor: int
    priority: int
    data_bw: float  # bits/s, used for the equal-priority tie-break
    polling_bw: float = 0.0

    @property
    def bandwidth(self) -> float:
        return self.data_bw + self.polling_bw

    @property
    def key(self) -> tuple[int, float, int]:
        return sensor_sort_key(self.priority, self.data_bw, self.sensor)


@dataclass
class BandwidthLedger:
    bw_effective: float
    bw_ideal: float
    bw_cs_control: float
    bw_sc_aware: float
    bw_sc_data: float
    bw_cs_polling: float
    b_l: float = 0.6
    b_h: float = 0.9

    def __post_init__(self):
        if not 0 < self.b_l < self.b_h < 1:
            raise ValueError("need 0 < b_l < b_h < 1")

    @property
    def bw_required(self) -> float:
        return required_bandwidth(self.bw_cs_control, self.bw_sc_aware, self.bw_sc_data, self.bw_cs_polling)


def adapt_packet_time(ip: IntervalParams, bw_ideal: float, bw_effective: float) -> float:
    if bw_effective <= 0:
        raise ChannelDead("effective bandwidth is zero")
    return min(ip.t_min_pkt * bw_ideal / bw_effective, ip.t_max_pkt)


def adapt_packet_count(
    d_i: int,
    t_i_new: float,
    ip: IntervalParams,
    bw_ideal: float,
    bw_effective: float,
    spec: SensorSpec | None = None,
) -> int:
    if bw_effective <= 0:
        raise ChannelDead("effective bandwidth is zero")
    base = d_i * (bw_ideal / bw_effective) / (t_i_new / ip.t_min_pkt)
    # guard against 2.9999999 from the float ratio
    d = math.floor(base + 1e-9)
    if spec is not None and spec.high_delay_sensitivity:
        d = max(d, spec.k_min)
    return d


def required_bandwidth(control: float, aware: float, data: float, polling: float) -> float:
    parts = (control, aware, data, polling)
    if any(x < 0 for x in parts):
        raise ValueError("bandwidth components must be non-negative")
    return control + aware + data + polling


class ReservationQueues:
    def __init__(self, entries_reserved: Iterable[Reservation] = (), entries_removed: Iterable[Reservation] = ()):
        self.reserved: CountingHeap[Reservation] = CountingHeap(key=lambda r: r.key, top="max")
        self.removed: CountingHeap[Reservation] = CountingHeap(key=lambda r: r.key, top="min")
        # reserved bandwidth per priority level, lets a hopeless eviction walk be skipped
        self._level_bw: dict[int, float] = defaultdict(float)
        for r in entries_reserved:
            self.add_reserved(r)
        for r in entries_removed:
            self.add_removed(r)

    @property
    def comparisons(self) -> int:
        return self.reserved.comparisons + self.removed.comparisons

    def add_reserved(self, r: Reservation) -> None:
        if r.sensor in self.removed:
            raise KeyError(f"sensor {r.sensor} is in the removed queue")
        self.reserved.push(r)
        self._level_bw[r.priority] += r.bandwidth

    def add_removed(self, r: Reservation) -> None:
        if r.sensor in self.reserved:
            raise KeyError(f"sensor {r.sensor} is in the reserved queue")
        self.removed.push(r)

    def drop_reserved(self, sensor: int) -> Reservation:
        r = self.reserved.remove(sensor)
        self._level_bw[r.priority] -= r.bandwidth
        return r

    def is_reserved(self, sensor: int) -> bool:
        return sensor in self.reserved

    def is_removed(self, sensor: int) -> bool:
        return sensor in self.removed

    def get(self, sensor: int) -> Reservation:
        if sensor in self.reserved:
            return self.reserved.get(sensor)
        return self.removed.get(sensor)

    def update(self, r: Reservation) -> None:
        if r.sensor in self.reserved:
            old = self.reserved.get(r.sensor)
            self._level_bw[old.priority] -= old.bandwidth
            self._level_bw[r.priority] += r.bandwidth
            self.reserved.update(r)
        elif r.sensor in self.removed:
            self.removed.update(r)
        else:
            raise KeyError(r.sensor)

    def lower_bandwidth(self, priority: int) -> float:
        """Reserved bandwidth held by sensors strictly less important than ``priority``."""
        return sum(bw for p, bw in self._level_bw.items() if p > priority)

    def reserved_ids(self) -> set[int]:
        return {r.sensor for r in self.reserved}

    def removed_ids(self) -> set[int]:
        return {r.sensor for r in self.removed}

    def service_order(self) -> list[Reservation]:
        """Reserved sensors, most important first."""
        return sorted(self.reserved, key=lambda r: r.key)

    def reserved_bandwidth(self) -> float:
        return sum(r.bandwidth for r in self.reserved)

    def snapshot(self) -> tuple[tuple, tuple]:
        return self.reserved.snapshot(), self.removed.snapshot()


@dataclass
class AdmitResult:
    sensor: int
    decision: Decision
    band: int
    evicted: list[int] = field(default_factory=list)
    total: float = 0.0  # aggregate bandwidth of evicted sensors (band 3)
    overshoot: float = 0.0

    @property
    def accepted(self) -> bool:
        return self.decision is Decision.ACCEPTED


def admit(
    q: ReservationQueues,
    s_add: Reservation,
    bw_effective: float,
    bw_required: float,
    b_l: float,
    b_h: float,
) -> AdmitResult:
    """Admit or refuse ``s_add``; mutates ``q`` in place.

    ``bw_required`` must already include the new reservation. A refused
    request leaves the reserved heap untouched and lands in the removed heap.
    """
    if s_add.sensor in q.reserved:
        raise KeyError(f"sensor {s_add.sensor} already reserved")
    if s_add.sensor in q.removed:
        q.removed.remove(s_add.sensor)

    if bw_required <= b_l * bw_effective:
        q.add_reserved(s_add)
        return AdmitResult(s_add.sensor, Decision.ACCEPTED, band=1)

    if bw_required <= b_h * bw_effective:
        if q.reserved:
            lowest = q.reserved.peek()
            if (s_add.priority, s_add.data_bw) > (lowest.priority, lowest.data_bw):
                q.add_removed(s_add)
                return AdmitResult(s_add.sensor, Decision.REJECTED, band=2)
        q.add_reserved(s_add)
        return AdmitResult(s_add.sensor, Decision.ACCEPTED, band=2)

    overshoot = bw_required - b_h * bw_effective
    # cheap pre-check keeps repeated hopeless walks out of the O(n log n) budget
    if q.lower_bandwidth(s_add.priority) < overshoot * (1 - 1e-9) - 1e-9:
        q.add_removed(s_add)
        return AdmitResult(s_add.sensor, Decision.REJECTED, band=3, overshoot=overshoot)

    temp: list[Reservation] = []
    total = 0.0
    for r in q.reserved.ordered():
        if not r.priority > s_add.priority:
            break
        temp.append(r)
        total += r.bandwidth
        if total >= overshoot:
            for victim in temp:
                q.drop_reserved(victim.sensor)
                q.add_removed(victim)
            q.add_reserved(s_add)
            return AdmitResult(
                s_add.sensor, Decision.ACCEPTED, band=3,
                evicted=[v.sensor for v in temp], total=total, overshoot=overshoot,
            )
    q.add_removed(s_add)
    return AdmitResult(s_add.sensor, Decision.REJECTED, band=3, total=total, overshoot=overshoot)


def re_reservation_scan(
    q: ReservationQueues,
    trigger: Trigger,
    required_with: Callable[[Reservation], float],
    bw_effective: float,
    b_l: float,
    b_h: float,
) -> list[AdmitResult]:
    """Re-submit removed sensors, most important first, until one is refused.

    ``required_with(r)`` returns the total required bandwidth if ``r`` were
    added to the current reserved set.
    """
    results: list[AdmitResult] = []
    tried: set[int] = set()
    while q.removed:
        candidate = q.removed.peek()
        if candidate.sensor in tried:
            break
        tried.add(candidate.sensor)
        res = admit(q, candidate, bw_effective, required_with(candidate), b_l, b_h)
        results.append(res)
        if not res.accepted:
            break
    return results


@dataclass(frozen=True)
class Window:
    sensor: int
    start: float  # ms from interval start
    t_i: float
    d_i: int

    @property
    def duration(self) -> float:
        return self.t_i * self.d_i


@dataclass
class IntervalPlan:
    overhead: float
    windows: list[Window]
    best_effort_start: float
    best_effort_time: float
    best_effort_sensors: list[int]
    truncated: dict[int, int]  # sensor -> packets cut this interval

    @property
    def scheduled_time(self) -> float:
        return self.overhead + sum(w.duration for w in self.windows) + self.best_effort_time


def build_interval_schedule(
    reserved_order: Sequence[SlotAllocation],
    ip: IntervalParams,
    overhead: float,
    best_effort: Sequence[int] = (),
) -> IntervalPlan:
    """Lay out one interval: overhead, reserved windows in queue order, then best effort.

    ``reserved_order`` is most important first. If the windows do not fit,
    packets are cut from the least important reservations.
    """
    usable = max(ip.t_interval - overhead, 0.0)
    d = [a.d_i for a in reserved_order]
    truncated: dict[int, int] = {}
    demand = sum(a.t_i * n for a, n in zip(reserved_order, d))
    idx = len(d) - 1
    while demand > usable + 1e-9 and idx >= 0:
        t_i = reserved_order[idx].t_i
        cut = min(d[idx], math.ceil((demand - usable - 1e-9) / t_i))
        if cut > 0:
            d[idx] -= cut
            demand -= t_i * cut
            sid = reserved_order[idx].sensor
            truncated[sid] = truncated.get(sid, 0) + cut
        idx -= 1
    windows = []
    t = min(overhead, ip.t_interval)
    for a, n in zip(reserved_order, d):
        windows.append(Window(a.sensor, t, a.t_i, n))
        t += a.t_i * n
    residue = max(ip.t_interval - t, 0.0)
    return IntervalPlan(
        overhead=overhead,
        windows=windows,
        best_effort_start=t,
        best_effort_time=residue,
        best_effort_sensors=list(best_effort),
        truncated=truncated,
    )
