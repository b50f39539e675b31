import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mafsim.energy import SystemConfig  # noqa: E402


@pytest.fixture
def default_config():
    return SystemConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_system(rng, **overrides):
    """Random but valid SystemConfig plus the matching oracle dict."""
    n = int(rng.integers(1, 40))
    m = int(rng.integers(1, 4))
    vector = rng.random() < 0.3
    p = tuple(rng.uniform(0.1, 3.0, n)) if vector else float(rng.uniform(0.1, 3.0))
    use_override = rng.random() < 0.5
    v = (tuple(rng.uniform(1, 20, n)) if vector else float(rng.uniform(1, 20))) if use_override else None
    el = tuple(rng.uniform(0.1, 3.0, n)) if vector else float(rng.uniform(0.1, 3.0))
    kwargs = dict(
        slice_count=m, devices_per_slice=n, round_duration=float(rng.integers(2, 60)),
        device_tx_power=p, bandwidth=float(rng.uniform(0.5, 5)),
        noise_power=float(rng.uniform(0.1, 3)), tx_rate_override=v,
        cpu_frequency=float(rng.uniform(0.5, 5)), compute_resources=float(rng.uniform(1, 1e4)),
        processing_power=float(rng.uniform(0.1, 5)), upload_power_per_block=float(rng.uniform(0.1, 5)),
        memory_size=float(rng.uniform(100, 1e5)), unit_block_size=float(rng.uniform(1, 500)),
        storage_threshold=float(rng.uniform(0.05, 1.0)), anomaly_interval=float(rng.uniform(1, 80)),
        abnormal_device_power=el, abnormal_device_count=int(rng.integers(0, n + 1)),
    )
    kwargs.update(overrides)
    cfg = SystemConfig(**kwargs)
    oracle = {"M": cfg.slice_count, "N": cfg.devices_per_slice, "p": cfg.device_tx_power,
              "v": cfg.tx_rate_override, "B": cfg.bandwidth, "N0": cfg.noise_power,
              "c": cfg.cpu_frequency, "P": cfg.compute_resources, "e_deal": cfg.processing_power,
              "e_up": cfg.upload_power_per_block, "S_size": cfg.memory_size,
              "S_unit": cfg.unit_block_size, "beta": cfg.storage_threshold, "e_l": cfg.abnormal_device_power}
    return cfg, oracle


# one line per acceptance criterion, filled by test_acceptance and echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
