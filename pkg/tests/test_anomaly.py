import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from mafsim.anomaly import (AnomalyEvent, AnomalyTimeline, build_timeline, resolve_round)
from mafsim.energy import SystemConfig
from mafsim.errors import ConstraintViolation


def test_periodic_events():
    tl = build_timeline(SystemConfig(), 60, "periodic")
    assert tl.times == (20.0, 40.0, 60.0)
    assert all(len(e.affected_devices) == 10 for e in tl.events)
    assert all(len(set(e.affected_devices)) == 10 for e in tl.events)


def test_short_horizon_is_empty():
    assert len(build_timeline(SystemConfig(), 10)) == 0


def test_seed_determinism():
    cfg = SystemConfig()
    a = build_timeline(cfg, 5000, "uniform", seed=7)
    b = build_timeline(cfg, 5000, "uniform", seed=7)
    assert a == b
    assert a != build_timeline(cfg, 5000, "uniform", seed=8)


def test_uniform_gaps():
    cfg = SystemConfig()
    tl = build_timeline(cfg, 200_000, "uniform", seed=3)
    gaps = np.diff((0.0,) + tl.times)
    assert np.all(gaps > 0) and np.all(gaps < 40)
    assert gaps.mean() == pytest.approx(20.0, rel=0.03)


def test_bad_mode():
    with pytest.raises(ValueError):
        build_timeline(SystemConfig(), 100, "poisson")


def test_events_must_increase():
    with pytest.raises(ValueError):
        AnomalyTimeline((AnomalyEvent(5.0, (1,)), AnomalyEvent(5.0, (2,))), 10.0)


def test_cumulative_count_nondecreasing():
    tl = build_timeline(SystemConfig(), 1000, "uniform", seed=1)
    counts = [tl.cumulative_count_at(t) for t in np.linspace(0, 1000, 500)]
    assert counts == sorted(counts)


def test_text_roundtrip(tmp_path):
    tl = build_timeline(SystemConfig(), 500, "uniform", seed=11)
    tl.save(tmp_path / "tl.txt")
    assert AnomalyTimeline.load(tmp_path / "tl.txt") == tl
    first_line = (tmp_path / "tl.txt").read_text().splitlines()[1]
    time_s, devices = first_line.split("\t")
    assert float(time_s) == tl.events[0].occurrence_time
    assert tuple(int(d) for d in devices.split(",")) == tl.events[0].affected_devices


def test_text_requires_header():
    with pytest.raises(ValueError):
        AnomalyTimeline.from_text("20.0\t1,2\n")


class TestResolveRound:
    def test_boundary_event_belongs_to_next_round(self):
        tl = build_timeline(SystemConfig(), 60)
        r = resolve_round(tl, 1, 20, 20)
        assert r.n_events == 0
        r2 = resolve_round(tl, 2, 1, 20)
        assert r2.n_caught == 1 and not r2.missed

    def test_missed_matches_closed_form(self):
        tl = build_timeline(SystemConfig(anomaly_interval=15), 60)
        r = resolve_round(tl, 1, 10, 20)
        assert r.n_caught == 0
        (event, t3), = r.missed
        assert t3 == 5.0
        assert r.cumulative_count == 0
        assert t3 == oracles.persistence_closed_form(1, 20, r.cumulative_count, 15)
        assert event.detected_time == 20.0

    def test_caught_inside_window(self):
        tl = build_timeline(SystemConfig(anomaly_interval=15), 60)
        r = resolve_round(tl, 1, 16, 20)
        assert r.n_caught == 1 and not r.missed
        assert r.caught[0].detected_time == r.caught[0].occurrence_time

    def test_event_at_window_end_is_missed(self):
        tl = build_timeline(SystemConfig(anomaly_interval=15), 60)
        r = resolve_round(tl, 1, 15, 20)
        assert r.n_caught == 0 and r.missed[0][1] == 5.0

    @pytest.mark.parametrize("t1", [0.99, 20.5])
    def test_contract(self, t1):
        tl = build_timeline(SystemConfig(), 60)
        with pytest.raises(ConstraintViolation):
            resolve_round(tl, 1, t1, 20)

    def test_against_scan_oracle(self, rng):
        cfg = SystemConfig()
        tl = build_timeline(cfg, 20 * 300, "uniform", seed=5)
        for k in range(1, 301):
            t1 = float(rng.uniform(1, 20))
            r = resolve_round(tl, k, t1, 20.0)
            caught, missed = oracles.resolve_by_scan(tl.times, k, t1, 20.0)
            assert [e.occurrence_time for e in r.caught] == caught
            assert [(e.occurrence_time, t3) for e, t3 in r.missed] == missed

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from(["periodic", "uniform"]),
           st.floats(1, 40))
    def test_partition_and_full_monitoring(self, seed, mode, interval):
        cfg = SystemConfig(anomaly_interval=interval)
        rounds = 30
        tl = build_timeline(cfg, rounds * 20, mode, seed)
        rng = np.random.default_rng(seed)
        total = 0
        for k in range(1, rounds + 1):
            r = resolve_round(tl, k, float(rng.uniform(1, 20)), 20)
            caught_times = {e.occurrence_time for e in r.caught}
            assert caught_times.isdisjoint({e.occurrence_time for e, _ in r.missed})
            total += r.n_events
            full = resolve_round(tl, k, 20, 20)
            assert not full.missed
        assert total == sum(1 for t in tl.times if t < rounds * 20)
