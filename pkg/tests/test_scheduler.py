import numpy as np
import pytest

from radiopage import scheduler
from radiopage.scheduler import (KB, CatalogEntry, ScheduleError, ScheduleState,
                                 advance, enqueue_update, eta, run_trace,
                                 synth_update_trace)


def entry(url, size_kb):
    return CatalogEntry(url=url, size_bytes=int(size_kb * KB))


def test_enqueue_backlog_and_additivity():
    state = ScheduleState(rates_bps=[10000])
    enqueue_update(state, entry("a.example", 200))
    assert state.backlog_bytes == 200 * KB
    for i in range(100):
        enqueue_update(state, entry(f"p{i}.example", 50))
    assert state.backlog_bytes == 200 * KB + 100 * 50 * KB


def test_supersede_replaces_queued_size_in_place():
    state = ScheduleState(rates_bps=[8000])
    enqueue_update(state, entry("a.example", 100))
    enqueue_update(state, entry("b.example", 70))
    advance(state, 10)  # drains 8000/8 * 10 = 10000 bytes off a.example
    assert state.queue[0].remaining_bytes == 100 * KB - 10_000
    enqueue_update(state, entry("a.example", 150))
    assert state.queue[0].url == "a.example"           # position kept
    assert state.queue[0].remaining_bytes == 150 * KB  # stale bytes replaced
    assert state.backlog_bytes == (150 + 70) * KB


def test_drain_time_500kb_at_10kbps():
    state = ScheduleState(rates_bps=[10000])
    enqueue_update(state, entry("big.example", 500))
    done = advance(state, 1000.0)
    assert len(done) == 1
    assert done[0].t == pytest.approx(500 * KB * 8 / 10000, abs=1e-9)  # 409.6 s


def test_zero_rate_leaves_backlog():
    state = ScheduleState(rates_bps=[0.0])
    enqueue_update(state, entry("a.example", 10))
    advance(state, 100)
    assert state.backlog_bytes == 10 * KB


def test_doubling_rate_halves_drain_time():
    t = {}
    for rate in (10000, 20000):
        state = ScheduleState(rates_bps=[rate])
        enqueue_update(state, entry("a.example", 300))
        t[rate] = advance(state, 10_000)[0].t
    assert t[20000] == pytest.approx(t[10000] / 2)


def test_multi_frequency_rates_aggregate():
    state = ScheduleState(rates_bps=[10000, 10000, 20000])
    enqueue_update(state, entry("a.example", 400))
    done = advance(state, 10_000)
    assert done[0].t == pytest.approx(400 * KB * 8 / 40000)


def test_eta_arithmetic():
    state = ScheduleState(rates_bps=[10000])
    enqueue_update(state, entry("a.example", 100))
    assert eta(state, "a.example") == pytest.approx(81.92)
    enqueue_update(state, entry("b.example", 100))
    assert eta(state, "b.example") == pytest.approx(2 * 81.92)
    state2 = ScheduleState(rates_bps=[10000])
    enqueue_update(state2, entry("tiny.example", 1))
    assert eta(state2, "tiny.example") == pytest.approx(1 * KB * 8 / 10000)


def test_eta_unknown_page_raises():
    state = ScheduleState(rates_bps=[10000])
    with pytest.raises(ScheduleError):
        eta(state, "nope.example")


def test_eta_exactness_against_completion():
    state = ScheduleState(rates_bps=[12800])
    enqueue_update(state, entry("a.example", 37))
    enqueue_update(state, entry("b.example", 111))
    predicted = eta(state, "b.example")
    done = advance(state, 1_000_000)
    completed = {c.url: c.t for c in done}
    assert completed["b.example"] == pytest.approx(predicted, abs=1e-9)


def test_conservation_at_every_sample():
    rng = np.random.default_rng(0)
    state = ScheduleState(rates_bps=[16000])
    for step in range(200):
        if rng.random() < 0.4:
            enqueue_update(state, entry(f"p{rng.integers(20)}.example",
                                        float(rng.uniform(5, 80))))
        advance(state, float(rng.uniform(0.5, 30)))
        assert state.bytes_enqueued - state.bytes_superseded - \
            state.bytes_drained == pytest.approx(state.backlog_bytes, abs=1e-6)


def test_timeline_strictly_increasing():
    state = ScheduleState(rates_bps=[10000])
    enqueue_update(state, entry("a.example", 50))
    for _ in range(10):
        advance(state, 1.0)
    ts = [t for t, _ in state.timeline]
    assert all(b > a for a, b in zip(ts, ts[1:]))


def test_run_trace_drain_inequality_returns_to_zero_hourly():
    # constant volume 18 KB/hour vs capacity 10000/8*3600 = 4.39 MB/hour
    updates = [(h * 3600.0, f"p{i}", 6 * KB) for h in range(24) for i in range(3)]
    state = run_trace(updates, [10000], horizon=24 * 3600.0, sample_dt=60)
    samples = np.array(state.timeline)
    for h in range(24):
        inside = samples[(samples[:, 0] >= h * 3600) & (samples[:, 0] < (h + 1) * 3600)]
        assert inside[:, 1].min() == 0.0


def test_run_trace_underprovision_grows_unbounded():
    # fresh pages each hour: 1 MB/hour inflow vs 1 kbps = 450 KB/hour drain
    updates = [(h * 3600.0, f"p{h}_{i}", 100 * KB)
               for h in range(24) for i in range(10)]
    state = run_trace(updates, [1000], horizon=24 * 3600.0, sample_dt=600)
    mins = []
    samples = np.array(state.timeline)
    for h in range(24):
        inside = samples[(samples[:, 0] >= h * 3600) & (samples[:, 0] < (h + 1) * 3600)]
        mins.append(inside[:, 1].min())
    assert all(b > a for a, b in zip(mins, mins[1:]))


def test_resupply_of_same_catalog_saturates_at_catalog_size():
    # supersede-in-place caps backlog near the catalog footprint even when
    # the link is far too slow: stale versions are replaced, not stacked
    updates = [(h * 3600.0, f"p{i}", 100 * KB)
               for h in range(48) for i in range(10)]
    state = run_trace(updates, [1000], horizon=48 * 3600.0, sample_dt=600)
    peak = max(b for _, b in state.timeline)
    assert peak <= 10 * 100 * KB + 1e-6


def test_run_trace_exact_capacity_bounded_by_interval_volume():
    volume = 450_000  # exactly 3600 s * 1000 bps / 8
    updates = [(h * 3600.0, "p0", volume) for h in range(48)]
    state = run_trace(updates, [1000], horizon=48 * 3600.0, sample_dt=300)
    peak = max(b for _, b in state.timeline)
    assert peak <= volume + 1e-6


def test_synth_trace_statistics():
    updates = synth_update_trace(n_pages=100, hours=72, seed=0)
    sizes = np.array([u[2] for u in updates], dtype=float)
    assert np.median(sizes) <= 200 * KB
    assert 220 * KB <= np.percentile(sizes, 90) <= 280 * KB
    assert sizes.max() <= 550 * KB
    hours = {u[0] for u in updates}
    assert len(hours) == 72


def test_updates_sorted_guard():
    with pytest.raises(ScheduleError):
        run_trace([(10.0, "a", 5), (5.0, "b", 5)], [1000], horizon=100)


def test_csv_roundtrip(tmp_path):
    updates = [(0.0, "a.example", 1000), (3600.0, "b.example", 2000)]
    upath = tmp_path / "updates.csv"
    scheduler.write_updates_csv(upath, updates)
    assert scheduler.read_updates_csv(upath) == updates
    state = run_trace(updates, [10000], horizon=7200)
    tpath = tmp_path / "timeline.csv"
    scheduler.write_timeline_csv(tpath, state)
    text = tpath.read_text()
    assert text.startswith("t_seconds,backlog_bytes")
