import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import random_system
from mafsim.energy import (EnergyBreakdown, SystemConfig, abnormal_energy, round_data,
                           round_e1, shannon_rate, total_round_energy, transmission_rate,
                           upload_energy_from_frequency, upload_frequency)
from mafsim.errors import ConfigError, ConstraintViolation


class TestSystemConfig:
    def test_defaults(self, default_config):
        c = default_config
        assert (c.round_duration, c.devices_per_slice, c.abnormal_device_count) == (20.0, 100, 10)
        assert (c.device_tx_power, c.abnormal_device_power, c.tx_rate_override) == (0.5, 1.0, 10.0)
        assert (c.cpu_frequency, c.compute_resources, c.upload_power_per_block) == (1.0, 10.0, 1.0)
        assert (c.unit_block_size, c.accuracy_threshold, c.anomaly_interval) == (100.0, 0.93, 20.0)

    @pytest.mark.parametrize("kwargs", [
        {"abnormal_device_count": 101},
        {"round_duration": 0.5},
        {"storage_threshold": 0.0},
        {"storage_threshold": 1.2},
        {"accuracy_threshold": 1.5},
        {"bandwidth": -1.0},
        {"device_tx_power": (0.5, 0.5)},
        {"abnormal_device_power": 0.0},
    ])
    def test_invariants_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            SystemConfig(**kwargs)

    def test_per_device_vector(self):
        cfg = SystemConfig(devices_per_slice=3, device_tx_power=[1, 2, 3], abnormal_device_count=1)
        assert cfg.device_tx_power == (1.0, 2.0, 3.0)
        np.testing.assert_array_equal(cfg.per_device("device_tx_power"), [1, 2, 3])


class TestTransmissionRate:
    def test_shannon(self):
        cfg = SystemConfig(bandwidth=1, device_tx_power=3, noise_power=1, tx_rate_override=None,
                           devices_per_slice=2, abnormal_device_count=1)
        np.testing.assert_array_equal(transmission_rate(cfg), [2.0, 2.0])

    def test_override_value(self, default_config):
        assert np.all(transmission_rate(default_config) == 10.0)

    def test_zero_rate_is_config_error(self):
        with pytest.raises(ConfigError):
            shannon_rate(2.0, 0.0, 1.0)

    def test_bad_bandwidth(self):
        with pytest.raises(ConfigError):
            shannon_rate(0.0, 1.0, 1.0)


class TestRoundE1:
    def test_transmission_hand_sum(self):
        cfg = SystemConfig(devices_per_slice=2, device_tx_power=0.5, abnormal_device_count=1)
        assert round_e1(cfg, 10)[0] == 10.0

    def test_processing_substitution(self):
        cfg = SystemConfig(processing_power=1.0, cpu_frequency=1.0, compute_resources=10000.0)
        assert round_data(cfg, 20) == 20000.0
        assert round_e1(cfg, 20)[1] == pytest.approx(2.0, rel=1e-15)

    def test_upload_substitution(self, default_config):
        assert round_e1(default_config, 20)[2] == pytest.approx(200.0, rel=1e-15)

    @pytest.mark.parametrize("t1", [0.5, 20.01, float("nan")])
    def test_out_of_window(self, default_config, t1):
        with pytest.raises(ConstraintViolation):
            round_e1(default_config, t1)

    def test_full_monitoring_calibration(self, default_config):
        e = round_e1(default_config, 20)
        assert e == pytest.approx((1000.0, 3400.0, 200.0))
        assert sum(e) / 20 == pytest.approx(230.0)

    def test_multi_slice_broadcast(self):
        cfg = SystemConfig(slice_count=3)
        one = round_e1(SystemConfig(), 7)
        assert round_e1(cfg, 7) == pytest.approx(tuple(3 * x for x in one))
        assert round_e1(cfg, [7, 7, 7]) == pytest.approx(tuple(3 * x for x in one))
        with pytest.raises(ConstraintViolation):
            round_e1(cfg, [7, 7])

    def test_random_against_oracle(self, rng):
        for _ in range(200):
            cfg, o = random_system(rng)
            t1s = list(rng.uniform(1, cfg.round_duration, cfg.slice_count))
            got = round_e1(cfg, t1s)
            want = (oracles.e_tran(o, t1s), oracles.e_deal(o, t1s), oracles.e_up_direct(o, t1s))
            for g, w in zip(got, want):
                assert g == pytest.approx(w, rel=1e-9)

    def test_strictly_increasing_in_t1(self, default_config):
        grid = np.linspace(1, 20, 40)
        values = np.array([round_e1(default_config, t) for t in grid])
        assert np.all(np.diff(values, axis=0) > 0)

    def test_doubling_devices_doubles_energy(self):
        a = round_e1(SystemConfig(devices_per_slice=50), 13)
        b = round_e1(SystemConfig(devices_per_slice=100), 13)
        assert b == pytest.approx(tuple(2 * x for x in a), rel=1e-15)

    def test_permutation_invariance(self, rng):
        p = rng.uniform(0.1, 2, 30)
        v = rng.uniform(1, 10, 30)
        cfg = SystemConfig(devices_per_slice=30, device_tx_power=p, tx_rate_override=v,
                           abnormal_device_count=3)
        perm = rng.permutation(30)
        cfg2 = SystemConfig(devices_per_slice=30, device_tx_power=p[perm], tx_rate_override=v[perm],
                            abnormal_device_count=3)
        assert round_e1(cfg, 9) == pytest.approx(round_e1(cfg2, 9), rel=1e-14)


class TestUploadFrequency:
    def test_zero_data(self, default_config):
        assert upload_frequency(default_config, 0) == 0

    def test_one_flush(self):
        cfg = SystemConfig(storage_threshold=0.8, memory_size=1000)
        assert upload_frequency(cfg, 800) == pytest.approx(1.0)

    def test_frequency_identity_example(self):
        cfg = SystemConfig(storage_threshold=0.5, memory_size=400, unit_block_size=100,
                           upload_power_per_block=1)
        f = upload_frequency(cfg, 600)
        assert f == pytest.approx(3.0)
        assert upload_energy_from_frequency(cfg, f) == pytest.approx(6.0)
        assert 1 * 600 / 100 == 6.0

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.01, 1.0), st.floats(1, 1e6), st.floats(1e-3, 1e4), st.floats(0, 1e7))
    def test_identity_property(self, beta, s_size, s_unit, data):
        cfg = SystemConfig(storage_threshold=beta, memory_size=s_size, unit_block_size=s_unit)
        lhs = upload_energy_from_frequency(cfg, upload_frequency(cfg, data))
        rhs = cfg.upload_power_per_block * data / s_unit
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)

    def test_negative_data(self, default_config):
        with pytest.raises(ValueError):
            upload_frequency(default_config, -1)


class TestAbnormalEnergy:
    def test_empty(self, default_config):
        assert abnormal_energy(default_config, []) == 0.0

    def test_one_event(self, default_config):
        entries = [(d, 5.0) for d in range(10)]
        assert abnormal_energy(default_config, entries) == 50.0

    def test_two_events(self, default_config):
        entries = [(d, 5.0) for d in range(10)] + [(d, 3.0) for d in range(5, 15)]
        assert abnormal_energy(default_config, entries) == 80.0

    def test_bad_device(self, default_config):
        with pytest.raises(ConstraintViolation):
            abnormal_energy(default_config, [(100, 1.0)])

    def test_negative_persistence(self, default_config):
        with pytest.raises(ConstraintViolation):
            abnormal_energy(default_config, [(1, -1.0)])


class TestTotal:
    @pytest.mark.parametrize("parts,total", [
        ((10, 2, 200, 0), 212), ((0, 0, 0, 0), 0), ((10, 2, 200, 50), 262)])
    def test_examples(self, parts, total):
        b = total_round_energy(*parts)
        assert isinstance(b, EnergyBreakdown)
        assert b.total == total

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            total_round_energy(1, -1, 0, 0)

    @given(st.lists(st.floats(0, 1e6), min_size=4, max_size=4))
    def test_additivity(self, parts):
        b = total_round_energy(*parts)
        assert b.total == parts[0] + parts[1] + parts[2] + parts[3]
        assert math.isfinite(b.total)
