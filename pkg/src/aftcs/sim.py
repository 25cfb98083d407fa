"""Interval-stepped simulation of one control node and its reserved/best-effort sensors.

Per interval: control and aware packets, one poll exchange (rotating over the
reserved sensors), slot adaptation from the smoothed effective bandwidth,
reserved windows in queue order, then best-effort residue. Once per tick the priority engine runs
(AFTCS only) and the reservation queues react to the resulting changes.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

from .bandwidth import Ewma, PollExchange, ideal_bandwidth, measure_effective_bandwidth
from .channel import ChannelState, path_loss_db, per_at_snr
from .config import ScenarioConfig
from .metrics import MetricsReport, compute_metrics
from .model import SensorSpec
from .priority import PriorityState, adjustment_factors, build_priority_queue, step_tuners, try_activate
from .readings import ReadingSource, generate_fault_info, infos_for, segment_at
from .reservation import (
    Reservation,
    ReservationQueues,
    SlotAllocation,
    Trigger,
    adapt_packet_count,
    adapt_packet_time,
    admit,
    build_interval_schedule,
    re_reservation_scan,
)
from .rng import substream

EPS = 1e-9


class SchemeKind(str, enum.Enum):
    AFTCS = "aftcs"
    BASELINE = "fixed_priority_baseline"

    @classmethod
    def parse(cls, value: "str | SchemeKind") -> "SchemeKind":
        if isinstance(value, SchemeKind):
            return value
        if value == "baseline":
            return cls.BASELINE
        return cls(value)


class Outcome(str, enum.Enum):
    DELIVERED = "delivered"
    DROPPED_CHANNEL = "dropped_channel"
    DROPPED_BUFFER = "dropped_buffer"
    DROPPED_RETRY_LIMIT = "dropped_retry_limit"
    QUEUED = "queued"  # still buffered when the run ended


@dataclass(slots=True)
class PacketRecord:
    sensor: int
    seq: int
    payload: int
    enqueued_at: float
    kind: str = "data"
    sent_at: float | None = None
    delivered_at: float | None = None
    attempts: int = 0
    outcome: Outcome | None = None

    @property
    def retries(self) -> int:
        return max(self.attempts - 1, 0)


@dataclass
class _Sensor:
    spec: SensorSpec
    frame: int
    airtime: float
    path_loss: float
    rng: object
    next_gen: float
    period_ms: float
    queue: deque = field(default_factory=deque)
    buffer_used: int = 0
    seq: int = 0
    aware_level: int = 0
    state: PriorityState | None = None


def _r(x: float, nd: int = 6) -> float:
    return round(x, nd)


class Engine:
    def __init__(self, cfg: ScenarioConfig, scheme: SchemeKind | str | None = None, seed: int | None = None):
        self.cfg = cfg
        self.scheme = SchemeKind.parse(scheme if scheme is not None else cfg.scheme)
        self.seed = cfg.seed if seed is None else int(seed)
        self.ip = cfg.interval
        self.radio = cfg.radio
        self.bw_ideal = ideal_bandwidth(self.ip)
        self.end_ms = cfg.duration_s * 1000.0
        self.trace: list[dict] = []
        self.channel = ChannelState(
            noise_floor=cfg.radio.ideal_noise_floor,
            path_loss_exponent=cfg.radio.path_loss_exponent,
            shadowing_sigma=cfg.shadowing_sigma,
            distance={s.id: s.distance_m for s in cfg.sensors},
            rng_seed=self.seed,
            tx_power=cfg.radio.tx_power,
            reference_loss=cfg.radio.reference_loss,
            ideal_noise_floor=cfg.radio.ideal_noise_floor,
        )
        self.sensors: dict[int, _Sensor] = {}
        for spec in cfg.sensors:
            frame = self.radio.frame_bytes(spec.payload_size)
            period = 1000.0 / spec.tx_rate if spec.tx_rate > 0 else math.inf
            phase = substream(self.seed, spec.id, "phase").uniform(0.0, period) if spec.tx_rate > 0 else math.inf
            lam = cfg.priority.lambda_overrides.get(spec.name, {})
            lam_map = {p: lam.get(p, cfg.priority.lambda_ms) for p in spec.priority_set}
            self.sensors[spec.id] = _Sensor(
                spec=spec,
                frame=frame,
                airtime=self.radio.airtime_ms(frame),
                path_loss=path_loss_db(spec.distance_m, cfg.radio.path_loss_exponent, cfg.radio.reference_loss),
                rng=substream(self.seed, spec.id, "channel"),
                next_gen=phase,
                period_ms=period,
                state=PriorityState.initial(spec, cfg.priority.theta, lam_map, 0.0),
            )
        self.poll_rng = {sid: substream(self.seed, sid, "poll") for sid in self.sensors}
        self.readings = ReadingSource(cfg, self.seed)
        self.queues = ReservationQueues()
        self.ewma = Ewma(cfg.mac.ewma_alpha)
        self.quality: float | None = None
        self._tick_samples: list[float] = []
        self._pending_aware: list[int] = []
        self._rr = 0
        self._poll_rr = 0
        self._last_required: float | None = None
        self._last_tick_bw: float | None = None
        mac = cfg.mac
        self.bw_control = mac.control_pkt_bytes * 8 * mac.control_rate
        self.bw_aware = mac.aware_pkt_bytes * 8 * mac.aware_budget_rate
        self.bw_polling = (mac.polling_pkt_bytes + mac.probe_packets * self.ip.s_pkt) * 8 / (self.ip.t_interval / 1000.0)

    # ------------------------------------------------------------ helpers

    def priority(self, sid: int) -> int:
        return self.sensors[sid].state.current

    def emit(self, ev: dict) -> None:
        self.trace.append(ev)

    def bw_effective(self) -> float:
        return self.ewma.value if self.ewma.ready else self.bw_ideal

    def base_count(self, spec: SensorSpec, priority: int) -> int:
        d = math.ceil(spec.tx_rate * self.ip.t_interval / 1000.0 - EPS) if spec.tx_rate > 0 else 0
        return d + self.cfg.reliability.extra_slots(priority)

    def allocation(self, sid: int, bw_eff: float) -> SlotAllocation:
        spec = self.sensors[sid].spec
        # the probe can read slightly above ideal; slots never shrink below t_min
        bw_eff = min(bw_eff, self.bw_ideal)
        t_i = adapt_packet_time(self.ip, self.bw_ideal, bw_eff)
        d = adapt_packet_count(self.base_count(spec, self.priority(sid)), t_i, self.ip, self.bw_ideal, bw_eff, spec)
        return SlotAllocation(sid, t_i, d)

    def reservation(self, sid: int, bw_eff: float) -> Reservation:
        spec = self.sensors[sid].spec
        d = self.allocation(sid, bw_eff).d_i if bw_eff > 0 else self.base_count(spec, self.priority(sid))
        data_bw = d * spec.payload_size * 8 / (self.ip.t_interval / 1000.0)
        return Reservation(sid, self.priority(sid), data_bw, self.bw_polling)

    def required_with(self, r: Reservation) -> float:
        return self.bw_control + self.bw_aware + self.queues.reserved_bandwidth() + r.bandwidth

    def required(self) -> float:
        return self.bw_control + self.bw_aware + self.queues.reserved_bandwidth()

    def _admit_event(self, res, trigger: Trigger, t: float, bw_eff: float) -> None:
        self.emit({
            "t": _r(t), "ev": "admit", "s": res.sensor, "trigger": trigger.value,
            "band": res.band, "decision": res.decision.value, "evicted": res.evicted,
            "sum": _r(res.total, 3), "overshoot": _r(res.overshoot, 3),
            "bw_eff": _r(bw_eff, 3), "b_l": self.cfg.b_l, "b_h": self.cfg.b_h,
        })

    # ------------------------------------------------------------ packets

    def _arrivals(self, s: _Sensor, now: float) -> None:
        cap = self.cfg.mac.buffer_bytes
        while s.next_gen <= now and s.next_gen < self.end_ms:
            pkt = PacketRecord(s.spec.id, s.seq, s.spec.payload_size, s.next_gen)
            s.seq += 1
            s.next_gen += s.period_ms
            if s.buffer_used + pkt.payload > cap:
                self._finish(pkt, Outcome.DROPPED_BUFFER)
            else:
                s.queue.append(pkt)
                s.buffer_used += pkt.payload

    def _finish(self, pkt: PacketRecord, outcome: Outcome) -> None:
        pkt.outcome = outcome
        self.emit({
            "t": _r(pkt.delivered_at if pkt.delivered_at is not None else (pkt.sent_at or pkt.enqueued_at)),
            "ev": "pkt", "s": pkt.sensor, "seq": pkt.seq, "enq": _r(pkt.enqueued_at),
            "sent": None if pkt.sent_at is None else _r(pkt.sent_at),
            "dlv": None if pkt.delivered_at is None else _r(pkt.delivered_at),
            "retries": pkt.retries, "out": outcome.value,
        })

    def _transmit_ok(self, rng, path_loss: float, frame: int) -> bool:
        snr = self.channel.tx_power - path_loss - rng.gauss(0.0, self.channel.shadowing_sigma) - self.channel.noise_floor
        return rng.random() >= per_at_snr(snr, frame)

    def _attempt(self, s: _Sensor, now: float, reserved: bool) -> bool:
        """One data slot; returns False if the sensor had nothing to send."""
        self._arrivals(s, now)
        if not s.queue:
            return False
        pkt = s.queue[0]
        if pkt.sent_at is None:
            pkt.sent_at = now
        pkt.attempts += 1
        if self._transmit_ok(s.rng, s.path_loss, s.frame):
            pkt.delivered_at = now + s.airtime
            s.queue.popleft()
            s.buffer_used -= pkt.payload
            self._finish(pkt, Outcome.DELIVERED)
        elif not reserved:
            s.queue.popleft()
            s.buffer_used -= pkt.payload
            self._finish(pkt, Outcome.DROPPED_CHANNEL)
        elif pkt.attempts > self.cfg.reliability.retry_limit(s.state.current):
            s.queue.popleft()
            s.buffer_used -= pkt.payload
            self._finish(pkt, Outcome.DROPPED_RETRY_LIMIT)
        return True

    # ------------------------------------------------------------ control plane

    def _poll(self, sid: int, now: float) -> float:
        """Poll exchange; returns the time it consumed."""
        mac, ip = self.cfg.mac, self.ip
        s = self.sensors[sid]
        rng = self.poll_rng[sid]
        poll_frame = self.radio.frame_bytes(mac.polling_pkt_bytes)
        probe_frame = self.radio.frame_bytes(ip.s_pkt)
        n = 0
        if self._transmit_ok(rng, s.path_loss, poll_frame):
            for _ in range(mac.probe_packets):
                n += self._transmit_ok(rng, s.path_loss, probe_frame)
        t_wait = ip.t_min_pkt * mac.probe_packets + (0.0 if n else ip.t_max_pkt)
        x = PollExchange(sid, ip.s_pkt, mac.polling_pkt_bytes, t_wait, n, ip.t_min_pkt, mac.probe_packets, ip.t_max_pkt)
        sample = measure_effective_bandwidth(x, now)
        self.ewma.add(sample)
        self._tick_samples.append(0.0 if sample.poll_lost else sample.bw_effective)
        return self.radio.airtime_ms(poll_frame) + self.radio.turnaround_ms + t_wait

    def _small_packet(self, payload: int) -> float:
        return self.radio.airtime_ms(self.radio.frame_bytes(payload)) + self.radio.turnaround_ms

    def _initial_admission(self) -> None:
        bw = self.bw_ideal
        order = build_priority_queue(
            [s.state for s in self.sensors.values()],
            {sid: self.reservation(sid, bw).data_bw for sid in self.sensors},
        )
        for sid in order:
            r = self.reservation(sid, bw)
            res = admit(self.queues, r, bw, self.required_with(r), self.cfg.b_l, self.cfg.b_h)
            self._admit_event(res, Trigger.INITIAL, 0.0, bw)
        self._last_required = self.required()
        self._last_tick_bw = bw

    # ------------------------------------------------------------ main loop

    def run(self) -> list[dict]:
        cfg, ip = self.cfg, self.ip
        self.emit({
            "ev": "header", "scenario": cfg.name, "scenario_hash": cfg.scenario_hash,
            "seed": self.seed, "scheme": self.scheme.value,
            "periods": [[a, b] for a, b in cfg.periods],
            "sensors": {str(s.id): s.name for s in cfg.sensors},
            "t_interval": ip.t_interval, "bw_ideal": self.bw_ideal,
        })
        n_intervals = int(round(self.end_ms / ip.t_interval))
        if n_intervals == 0:
            self.emit({"ev": "end", "t": 0.0})
            return self.trace
        self._initial_admission()
        self._sample_priorities(0.0)
        ticks_every = int(round(cfg.priority.tick_ms / ip.t_interval))
        control_every = (
            max(int(round(1000.0 / cfg.mac.control_rate / ip.t_interval)), 1) if cfg.mac.control_rate > 0 else 0
        )
        slot = ip.t_min_pkt
        for k in range(n_intervals):
            t0 = k * ip.t_interval
            self.channel.noise_floor = segment_at(cfg.schedule, t0 / 1000.0).noise_floor

            overhead = 0.0
            if control_every and k % control_every == 0:
                overhead += self._small_packet(cfg.mac.control_pkt_bytes)
            for sid in self._pending_aware:
                self.emit({"t": _r(t0 + overhead), "ev": "aware", "s": sid})
                overhead += self._small_packet(cfg.mac.aware_pkt_bytes)
            self._pending_aware.clear()
            order = [r.sensor for r in self.queues.service_order()]
            if order:
                # one poll exchange per interval, rotating through the reserved set
                overhead += self._poll(order[self._poll_rr % len(order)], t0 + overhead)
                self._poll_rr += 1

            bw_eff = self.bw_effective()
            self.emit({"t": _r(t0), "ev": "bw", "bw": _r(bw_eff, 3)})
            if bw_eff > 0:
                allocs = [self.allocation(sid, bw_eff) for sid in order]
            else:
                allocs = []
                self.emit({"t": _r(t0), "ev": "channel_dead"})
            best_effort = sorted(
                (sid for sid in self.sensors if not self.queues.is_reserved(sid)),
                key=lambda sid: (self.priority(sid), sid),
            )
            plan = build_interval_schedule(allocs, ip, overhead, best_effort)
            if plan.truncated:
                self.emit({"t": _r(t0), "ev": "truncate", "cut": {str(k_): v for k_, v in plan.truncated.items()}})

            for w in plan.windows:
                s = self.sensors[w.sensor]
                start = t0 + w.start
                for j in range(math.floor(w.duration / slot + EPS)):
                    self._attempt(s, start + j * slot, reserved=True)
            if plan.best_effort_sensors:
                n_slots = math.floor(plan.best_effort_time / slot + EPS)
                ids = plan.best_effort_sensors
                for j in range(n_slots):
                    now = t0 + plan.best_effort_start + j * slot
                    for step in range(len(ids)):
                        s = self.sensors[ids[(self._rr + step) % len(ids)]]
                        if self._attempt(s, now, reserved=False):
                            self._rr = (self._rr + step + 1) % len(ids)
                            break

            t_end = t0 + ip.t_interval
            for s in self.sensors.values():
                self._arrivals(s, t_end - EPS)
            if (k + 1) % ticks_every == 0:
                self._tick(t_end)

        for s in self.sensors.values():
            self._arrivals(s, self.end_ms)
            while s.queue:
                pkt = s.queue.popleft()
                s.buffer_used -= pkt.payload
                self._finish(pkt, Outcome.QUEUED)
        self.emit({"ev": "end", "t": _r(self.end_ms)})
        return self.trace

    def _tick(self, t: float) -> None:
        cfg = self.cfg
        if self._tick_samples:
            raw = sum(self._tick_samples) / len(self._tick_samples) / self.bw_ideal
            a = cfg.runtime.quality_alpha
            self.quality = raw if self.quality is None else a * raw + (1 - a) * self.quality
            self._tick_samples.clear()

        util = {sid: s.buffer_used / cfg.mac.buffer_bytes for sid, s in self.sensors.items()}
        for sid, s in self.sensors.items():
            level = 2 if util[sid] >= cfg.runtime.buffer_critical else 1 if util[sid] >= cfg.runtime.buffer_warn else 0
            if level > s.aware_level:
                self._pending_aware.append(sid)
            s.aware_level = level

        infos = generate_fault_info(cfg, t, self.readings, util, self.quality)
        before = {sid: s.state.current for sid, s in self.sensors.items()}
        if self.scheme is SchemeKind.AFTCS:
            for sid, s in self.sensors.items():
                deltas = adjustment_factors(cfg.favorability, s.spec, infos_for(infos, sid), cfg.priority.weights)
                s.state = step_tuners(s.state, deltas, t)
                s.state, new = try_activate(s.state, t)
                if new is not None:
                    self.emit({"t": _r(t), "ev": "activate", "s": sid, "from": before[sid], "to": new})

        bw_eff = self.bw_effective()
        for sid in self.sensors:
            if self.queues.is_reserved(sid) or self.queues.is_removed(sid):
                self.queues.update(self.reservation(sid, bw_eff))

        triggers = []
        for sid, s in self.sensors.items():
            now_p = s.state.current
            if now_p < before[sid] and self.queues.is_removed(sid):
                triggers.append(Trigger.PRIORITY_RAISED)
            elif now_p > before[sid] and self.queues.is_reserved(sid):
                triggers.append(Trigger.RESERVED_PRIORITY_LOWERED)
        req = self.required()
        if self._last_required is not None and req < self._last_required * (1 - 0.01):
            triggers.append(Trigger.REQUIREMENT_REDUCED)
        if self._last_tick_bw is not None and bw_eff > self._last_tick_bw * 1.10:
            triggers.append(Trigger.EFFECTIVE_BW_INCREASED)
        self._last_required = req
        self._last_tick_bw = bw_eff

        if triggers and self.queues.removed and bw_eff > 0:
            for res in re_reservation_scan(
                self.queues, triggers[0], self.required_with, bw_eff, cfg.b_l, cfg.b_h
            ):
                self._admit_event(res, triggers[0], t, bw_eff)
            self._last_required = self.required()
        self._sample_priorities(t)

    def _sample_priorities(self, t: float) -> None:
        shares = {}
        bw = self.bw_effective()
        for sid in self.sensors:
            shares[sid] = self.reservation(sid, bw).data_bw
        order = build_priority_queue([s.state for s in self.sensors.values()], shares)
        for rank, sid in enumerate(order):
            self.emit({"t": _r(t), "ev": "prio", "s": sid, "p": self.priority(sid), "rank": rank})


@dataclass
class RunResult:
    trace: list[dict]
    report: MetricsReport
    cfg: ScenarioConfig
    scheme: SchemeKind
    seed: int


def run_scenario(cfg: ScenarioConfig, scheme: SchemeKind | str | None = None, seed: int | None = None) -> RunResult:
    eng = Engine(cfg, scheme, seed)
    trace = eng.run()
    return RunResult(trace, compute_metrics(trace), cfg, eng.scheme, eng.seed)
