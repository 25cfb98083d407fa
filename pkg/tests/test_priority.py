import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aftcs import load_bundled
from aftcs.model import SensorSpec
from aftcs.priority import (
    Bands,
    FaultInfo,
    FavorabilityTable,
    Impact,
    Kind,
    PriorityState,
    UnknownChannel,
    Weights,
    acquiescence,
    adjustment_factor,
    adjustment_factors,
    build_priority_queue,
    classify_reading,
    step_tuners,
    try_activate,
)

from oracles import first_activation_tick

TEMP = SensorSpec(2, "Temperature", 2, 1, False, {3, 4, 5, 6}, 5)


def state(current=5, tuners=None, act=0.0, lam=10_000.0, theta=0.4, prios=(3, 4, 5, 6)):
    tuners = tuners or {}
    return PriorityState(
        sensor=0,
        current=current,
        tuners={p: tuners.get(p, 0.0) for p in prios},
        activation_time=act,
        lam={p: lam for p in prios},
        theta=theta,
    )


def test_acquiescence_window():
    s = state(lam=10_000.0)
    assert acquiescence(s, 5, 5_000.0) == 1
    assert acquiescence(s, 5, 15_000.0) == 0
    assert acquiescence(state(lam=0.0), 5, 0.0) == 0


def test_step_pins_during_hold():
    s = state(tuners={3: 0.3, 6: -0.2})
    out = step_tuners(s, {p: 0.7 for p in (3, 4, 5, 6)}, 5_000.0)
    assert all(m == 0.0 for m in out.tuners.values())


def test_step_accumulates_without_clamp():
    s = state(tuners={3: 0.1, 4: 0.1}, lam=0.0)
    out = step_tuners(s, {3: 0.1, 4: -0.3, 5: 0.0, 6: 0.0}, 1.0)
    assert out.tuners[3] == pytest.approx(0.2)
    assert out.tuners[4] == pytest.approx(-0.2)


def test_activation_resets_all_tuners():
    s = state(tuners={4: 0.45, 6: 0.1}, lam=0.0)
    out, won = try_activate(s, 7.0)
    assert won == 4 and out.current == 4 and out.activation_time == 7.0
    assert all(m == 0.0 for m in out.tuners.values())


def test_most_important_candidate_wins():
    s = state(tuners={4: 0.6, 6: 0.5}, lam=0.0, current=5)
    _, won = try_activate(s, 0.0)
    assert won == 4


def test_threshold_is_inclusive_and_skips_current():
    s = state(tuners={5: 9.0, 6: 0.4}, lam=0.0, current=5)
    assert try_activate(s, 0.0)[1] == 6
    s = state(tuners={6: 0.399}, lam=0.0)
    assert try_activate(s, 0.0) == (s, None)


def test_activation_walkthrough():
    # theta 0.4, tuner grows by 0.15 per tick after a zero-length hold
    s = state(lam=0.0, current=6, theta=0.4)
    won = None
    for t in range(1, 10):
        s = step_tuners(s, {3: 0.0, 4: 0.0, 5: 0.15, 6: 0.0}, float(t))
        s, won = try_activate(s, float(t))
        if won is not None:
            break
    assert (t, won) == (3, 5)


def test_priority_queue_order():
    shares = {1: 10.0, 2: 20.0, 3: 30.0, 4: 5.0, 5: 8.0}
    prios = {1: 1, 2: 2, 3: 2, 4: 3, 5: 3}
    states = [state(current=p, prios=(p,)).__class__(
        sensor=sid, current=p, tuners={p: 0.0}, activation_time=0.0, lam={p: 0.0}, theta=0.4)
        for sid, p in prios.items()]
    assert build_priority_queue(states, shares) == [1, 2, 3, 4, 5]
    tied = [PriorityState(sid, 2, {2: 0.0}, 0.0, {2: 0.0}, 0.4) for sid in (9, 3, 7)]
    assert build_priority_queue(tied, {}) == [3, 7, 9]


def test_adjustment_factor_signs():
    w = Weights(0.1, 0.2)
    assert adjustment_factor([Impact.FAVORABLE, Impact.FAVORABLE], w) == pytest.approx(0.2)
    assert adjustment_factor([Impact.UNFAVORABLE], w) == pytest.approx(-0.2)
    assert adjustment_factor([Impact.NEUTRAL], w) == 0.0


def test_unknown_channel():
    table = FavorabilityTable()
    with pytest.raises(UnknownChannel):
        classify_reading(table, "x", FaultInfo(Kind.BIO, "nope", 1.0, 0.0), 3)


def test_bands_edges():
    b = Bands(("low", "normal", "high"), (36.0, 37.5))
    assert b.category(35.9) == "low"
    assert b.category(36.0) == "normal"
    assert b.category(37.5) == "high"
    with pytest.raises(ValueError):
        Bands(("a",), (1.0,))


def test_bundled_temperature_table_follows_reference_pattern():
    cfg = load_bundled()
    table = cfg.favorability
    p1, p2, p3 = 6, 5, 4
    F, U = Impact.FAVORABLE, Impact.UNFAVORABLE
    expect = {
        ("body_temperature", "low"): (U, F, F),
        ("body_temperature", "normal"): (F, U, U),
        ("body_temperature", "high"): (U, F, F),
        ("temperature_fluctuation", "large"): (U, U, F),
    }
    for (channel, cat), row in expect.items():
        got = tuple(table.lookup("Temperature", channel, cat, p) for p in (p1, p2, p3))
        assert got == row, (channel, cat)


def test_low_temperature_penalizes_least_important_level():
    cfg = load_bundled()
    spec = cfg.sensor("Temperature")
    infos = [
        FaultInfo(Kind.BIO, "body_temperature", 35.5, 0.0, spec.id),
        FaultInfo(Kind.BIO, "temperature_fluctuation", 0.1, 0.0, spec.id),
    ]
    d = adjustment_factors(cfg.favorability, spec, infos, cfg.priority.weights)
    assert d[6] < 0 < d[4] and d[6] < d[5]


# ------------------------------------------------ invariant suite


def _random_deltas(rng, prios):
    return {p: rng.choice([-0.2, -0.1, 0.0, 0.05, 0.1, 0.15, 0.3]) for p in prios}


def random_tick_walk(n_ticks: int = 10_000, seed: int = 7) -> tuple[int, list]:
    """Drive random states through step/activate and collect invariant violations."""
    rng = random.Random(seed)
    violations = []
    ticks = 0
    sets = [(0, 1, 2, 3), (2, 3, 4, 5), (3, 4, 5, 6), (1, 4), (6,)]
    while ticks < n_ticks:
        prios = rng.choice(sets)
        lam = {p: rng.choice([0.0, 1000.0, 3000.0, 10_000.0]) for p in prios}
        s = PriorityState(0, rng.choice(prios), {p: 0.0 for p in prios}, 0.0, lam, rng.choice([0.2, 0.4, 0.7]))
        for k in range(1, rng.randint(50, 400)):
            t = 1000.0 * k
            held = acquiescence(s, s.current, t) == 1
            nxt = step_tuners(s, _random_deltas(rng, prios), t)
            if held and any(m != 0.0 for m in nxt.tuners.values()):
                violations.append(("pin", t))
            candidates = [p for p, m in nxt.tuners.items() if p != nxt.current and m >= nxt.theta]
            after, won = try_activate(nxt, t)
            if won is not None:
                if any(m != 0.0 for m in after.tuners.values()):
                    violations.append(("reset", t))
                if any(c < won for c in candidates):
                    violations.append(("highest", t))
                if after.activation_time != t:
                    violations.append(("time", t))
            elif candidates:
                violations.append(("missed", t))
            if after.current not in prios:
                violations.append(("set", t))
            s = after
            ticks += 1
    return ticks, violations


def test_invariants_over_10000_random_ticks():
    ticks, violations = random_tick_walk()
    assert ticks >= 10_000
    assert violations == []


def activation_tick(theta: float, delta: float, hold: int, tick: float = 1000.0) -> int:
    s = PriorityState(0, 6, {5: 0.0, 6: 0.0}, 0.0, {5: hold * tick, 6: hold * tick}, theta)
    k = 0
    while True:
        k += 1
        s = step_tuners(s, {5: delta, 6: 0.0}, k * tick)
        s, won = try_activate(s, k * tick)
        if won is not None:
            return k
        if k > 100_000:
            raise AssertionError("no activation")


@settings(max_examples=400, deadline=None)
@given(
    theta_n=st.integers(1, 64),
    delta_n=st.integers(1, 64),
    hold=st.integers(0, 20),
)
def test_first_activation_closed_form(theta_n, delta_n, hold):
    # dyadic values keep the float accumulation exact
    k = activation_tick(theta_n / 64, delta_n / 64, hold)
    # hold ticks are 1..hold-1 (tick 0 is the activation itself)
    assert k == first_activation_tick(Fraction(theta_n, 64), Fraction(delta_n, 64), max(hold - 1, 0))
