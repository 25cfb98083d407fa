import pytest

from aftcs.metrics import (
    MismatchError,
    TraceError,
    compare_runs,
    compute_metrics,
    read_trace,
    render_metrics_csv,
    write_trace,
)


def header(**kw):
    h = {
        "ev": "header", "scenario": "t", "scenario_hash": "abc", "seed": 1, "scheme": "aftcs",
        "periods": [[0.0, 10.0], [10.0, 20.0]], "sensors": {"1": "A", "2": "B"},
        "t_interval": 100.0, "bw_ideal": 1.0,
    }
    h.update(kw)
    return h


def pkt(s, seq, enq, out, dlv=None):
    return {"ev": "pkt", "t": enq, "s": s, "seq": seq, "enq": enq, "sent": dlv, "dlv": dlv, "retries": 0, "out": out}


def trace_with(pkts, **kw):
    return [header(**kw), *pkts, {"ev": "end", "t": 20000.0}]


def test_loss_rate_definition():
    pkts = [pkt(1, i, 100.0 * i, "delivered", 100.0 * i + 5) for i in range(90)]
    pkts += [pkt(1, 90 + i, 100.0 * i, "dropped_channel") for i in range(10)]
    rep = compute_metrics(trace_with(pkts))
    row = rep.row("A", 1)
    assert (row.generated, row.delivered) == (100, 90)
    assert row.loss_rate == pytest.approx(0.10)
    assert row.avg_latency_ms == pytest.approx(5.0)


def test_empty_period_is_undefined():
    rep = compute_metrics(trace_with([pkt(1, 0, 500.0, "delivered", 510.0)]))
    assert rep.row("A", 2).loss_rate is None
    assert rep.row("B", 1).avg_latency_ms is None
    assert "B,1,NA,NA,0,0" in render_metrics_csv(rep)


def test_attributed_by_enqueue_time():
    rep = compute_metrics(trace_with([pkt(1, 0, 9999.0, "delivered", 10050.0)]))
    assert rep.row("A", 1).delivered == 1 and rep.row("A", 2).generated == 0


def test_queued_counts_as_not_delivered():
    rep = compute_metrics(trace_with([pkt(1, 0, 100.0, "queued")]))
    assert rep.row("A", 1).loss_rate == 1.0 and rep.row("A", 1).queued == 1


def test_truncated_trace_rejected():
    with pytest.raises(TraceError):
        compute_metrics([header(), pkt(1, 0, 1.0, "queued")])
    with pytest.raises(TraceError):
        compute_metrics([pkt(1, 0, 1.0, "queued"), {"ev": "end"}])


def test_top_sensor_and_priority_lookup():
    prio = [
        {"ev": "prio", "t": 1000.0, "s": 1, "p": 3, "rank": 1},
        {"ev": "prio", "t": 1000.0, "s": 2, "p": 2, "rank": 0},
        {"ev": "prio", "t": 2000.0, "s": 1, "p": 1, "rank": 0},
        {"ev": "prio", "t": 2000.0, "s": 2, "p": 2, "rank": 1},
        {"ev": "prio", "t": 3000.0, "s": 1, "p": 1, "rank": 0},
        {"ev": "prio", "t": 3000.0, "s": 2, "p": 2, "rank": 1},
    ]
    rep = compute_metrics(trace_with(prio))
    assert rep.top_sensor(1) == "A"
    assert rep.top_sensor(2) is None
    assert rep.priority_at("A", 1.5) == 3 and rep.priority_at("A", 2.0) == 1


def test_compare_identical_reports():
    t = trace_with([pkt(1, 0, 1.0, "delivered", 4.0), pkt(2, 0, 1.0, "dropped_buffer")])
    rows = compare_runs(compute_metrics(t), compute_metrics(t))
    assert len(rows) == 4
    for r in rows:
        assert r.loss_delta in (0.0, None) and r.latency_delta in (0.0, None)


def test_compare_refuses_mismatch():
    a = compute_metrics(trace_with([]))
    with pytest.raises(MismatchError):
        compare_runs(a, compute_metrics(trace_with([], scenario_hash="zzz")))
    with pytest.raises(MismatchError):
        compare_runs(a, compute_metrics(trace_with([], seed=2)))


def test_trace_roundtrip(tmp_path):
    t = trace_with([pkt(1, 0, 1.0, "delivered", 4.25)])
    write_trace(tmp_path / "t.jsonl", t)
    assert read_trace(tmp_path / "t.jsonl") == t
    (tmp_path / "bad.jsonl").write_text('{"ev": "header"}\n{oops\n')
    with pytest.raises(TraceError):
        read_trace(tmp_path / "bad.jsonl")
