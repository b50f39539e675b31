"""Invalid-energy model of a dormancy-controlled monitoring cluster.

Units used throughout the package: time in minutes, power in kW, energy in
kW*min, data in MB and rates in MB/minute.

Default values reproduce the experimental parameter table. Three constants
the table does not give are calibrated so that the always-on (full
monitoring) policy costs 230 kW per minute with T = 20, N = 100:

    transmission   p * N               = 0.5 * 100            =  50 kW
    upload         e_up * v * N / S_u  = 1 * 10 * 100 / 100    =  10 kW
    processing     e_deal * v * N / cP = 1.7 * 10 * 100 / 10   = 170 kW
                                                               ------
                                                                230 kW

``processing_power`` (e_deal = 1.7) is the calibrated constant; c = 1 and
P = 10 come from the table. ``storage_threshold`` (0.8) and ``memory_size``
(10000 MB) only set the upload cadence, they cancel out of the upload energy.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence, Union

import numpy as np

from mafsim.errors import ConfigError, ConstraintViolation

PerDevice = Union[float, Sequence[float]]


@dataclass(frozen=True)
class SystemConfig:
    slice_count: int = 1
    devices_per_slice: int = 100
    round_duration: float = 20.0
    device_tx_power: PerDevice = 0.5
    bandwidth: float = 1.0
    noise_power: float = 1.0
    tx_rate_override: PerDevice | None = 10.0
    cpu_frequency: float = 1.0
    compute_resources: float = 10.0
    processing_power: float = 1.7
    upload_power_per_block: float = 1.0
    memory_size: float = 10000.0
    unit_block_size: float = 100.0
    storage_threshold: float = 0.8
    anomaly_interval: float = 20.0
    abnormal_device_power: PerDevice = 1.0
    abnormal_device_count: int = 10
    accuracy_threshold: float = 0.93

    def __post_init__(self):
        for name in ("device_tx_power", "tx_rate_override", "abnormal_device_power"):
            value = getattr(self, name)
            if value is not None and not np.isscalar(value):
                object.__setattr__(self, name, tuple(float(v) for v in value))
        self.validate()

    def validate(self) -> None:
        if int(self.slice_count) != self.slice_count or self.slice_count < 1:
            raise ConfigError("slice_count must be an integer >= 1")
        if int(self.devices_per_slice) != self.devices_per_slice or self.devices_per_slice < 1:
            raise ConfigError("devices_per_slice must be an integer >= 1")
        if not self.round_duration >= 1:
            raise ConfigError("round_duration must be >= 1 minute")
        if int(self.abnormal_device_count) != self.abnormal_device_count:
            raise ConfigError("abnormal_device_count must be an integer")
        if not 0 <= self.abnormal_device_count <= self.devices_per_slice:
            raise ConfigError("abnormal_device_count out of [0, devices_per_slice]")
        if not 0 < self.storage_threshold <= 1:
            raise ConfigError("storage_threshold out of (0,1]")
        if not 0 < self.accuracy_threshold <= 1:
            raise ConfigError("accuracy_threshold out of (0,1]")
        for name in ("bandwidth", "noise_power", "cpu_frequency", "compute_resources",
                     "processing_power", "upload_power_per_block", "memory_size",
                     "unit_block_size", "anomaly_interval"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {value!r}")
        for name in ("device_tx_power", "tx_rate_override", "abnormal_device_power"):
            value = getattr(self, name)
            if value is None:
                continue
            arr = np.asarray(value, dtype=float)
            if arr.ndim > 1 or (arr.ndim == 1 and arr.shape[0] != self.devices_per_slice):
                raise ConfigError(f"{name} must be a scalar or a length-{self.devices_per_slice} vector")
            if not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
                raise ConfigError(f"{name} must be finite and > 0")

    def per_device(self, name: str) -> np.ndarray:
        """Length-N vector of a per-device parameter (scalars are broadcast)."""
        value = getattr(self, name)
        return np.broadcast_to(np.asarray(value, dtype=float), (self.devices_per_slice,)).copy()

    @property
    def processing_capacity(self) -> float:
        """c * P, MB the server can process per round."""
        return self.cpu_frequency * self.compute_resources

    def to_dict(self) -> dict:
        out = asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class EnergyBreakdown:
    e_tran: float
    e_deal: float
    e_up: float
    e_abnormal: float
    total: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.e_tran, self.e_deal, self.e_up, self.e_abnormal, self.total)


def shannon_rate(bandwidth, tx_power, noise_power):
    """B * log2(1 + p / N0). Raises ConfigError if any rate is not strictly positive."""
    bandwidth = np.asarray(bandwidth, dtype=float)
    noise_power = np.asarray(noise_power, dtype=float)
    if np.any(bandwidth <= 0) or np.any(noise_power <= 0):
        raise ConfigError("bandwidth and noise_power must be > 0")
    rate = bandwidth * np.log2(1.0 + np.asarray(tx_power, dtype=float) / noise_power)
    if not np.all(np.isfinite(rate)) or np.any(rate <= 0):
        raise ConfigError(f"non-positive transmission rate {rate!r}")
    return float(rate) if rate.ndim == 0 else rate


def transmission_rate(config: SystemConfig) -> np.ndarray:
    """Per-device upload rate in MB/minute (length-N vector).

    Uses ``tx_rate_override`` when set, otherwise the Shannon rate.
    """
    if config.tx_rate_override is not None:
        return config.per_device("tx_rate_override")
    rate = shannon_rate(config.bandwidth, config.per_device("device_tx_power"), config.noise_power)
    return np.asarray(rate, dtype=float)


def _monitor_durations(config: SystemConfig, monitor_durations) -> np.ndarray:
    t1 = np.atleast_1d(np.asarray(monitor_durations, dtype=float))
    if t1.shape == (1,) and config.slice_count > 1:
        t1 = np.repeat(t1, config.slice_count)
    if t1.shape != (config.slice_count,):
        raise ConstraintViolation(f"expected {config.slice_count} monitor durations, got {t1.shape}")
    if np.any(~np.isfinite(t1)) or np.any(t1 < 1) or np.any(t1 > config.round_duration):
        raise ConstraintViolation(
            f"monitor duration {t1} outside [1, {config.round_duration}]; clamp before calling")
    return t1


def round_data(config: SystemConfig, monitor_durations) -> float:
    """Total MB sent to the server in one round, sum over slices and devices of v * t1."""
    t1 = _monitor_durations(config, monitor_durations)
    return float(np.sum(transmission_rate(config)) * np.sum(t1))


def round_e1(config: SystemConfig, monitor_durations) -> tuple[float, float, float]:
    """Monitoring energy of one round: (transmission, processing, upload).

    ``monitor_durations`` is one t1 per slice (a scalar is broadcast).
    """
    t1 = _monitor_durations(config, monitor_durations)
    total_t1 = float(np.sum(t1))
    e_tran = float(np.sum(config.per_device("device_tx_power"))) * total_t1
    data = float(np.sum(transmission_rate(config))) * total_t1
    e_deal = config.processing_power * data / config.processing_capacity
    e_up = config.upload_power_per_block * data / config.unit_block_size
    return e_tran, e_deal, e_up


def upload_frequency(config: SystemConfig, total_data: float) -> float:
    """Number of memory flushes to the cloud triggered by ``total_data`` MB."""
    if total_data < 0:
        raise ValueError("total_data must be >= 0")
    return total_data / (config.storage_threshold * config.memory_size)


def upload_energy_from_frequency(config: SystemConfig, frequency: float) -> float:
    """Upload energy expressed through the flush count: e_up * beta * S_size / S_unit * f."""
    return (config.upload_power_per_block * config.storage_threshold * config.memory_size
            / config.unit_block_size * frequency)


def abnormal_energy(config: SystemConfig, persistences: Iterable[tuple[int, float]]) -> float:
    """Energy burnt by undetected faults.

    ``persistences`` holds one ``(device, t3)`` entry per affected device per
    missed event; an empty list means every fault was caught.
    """
    powers = config.per_device("abnormal_device_power")
    total = 0.0
    devices = set()
    for device, t3 in persistences:
        if not 0 <= device < config.devices_per_slice:
            raise ConstraintViolation(f"device index {device} out of range")
        if t3 < 0:
            raise ConstraintViolation(f"negative persistence {t3}")
        devices.add(device)
        total += powers[device] * t3
    if len(devices) > config.devices_per_slice:
        raise ConstraintViolation("more abnormal devices than devices in the slice")
    return float(total)


def total_round_energy(e_tran: float, e_deal: float, e_up: float, e_abnormal: float) -> EnergyBreakdown:
    parts = (e_tran, e_deal, e_up, e_abnormal)
    if any(p < 0 for p in parts):
        raise ValueError(f"energy components must be >= 0, got {parts}")
    return EnergyBreakdown(e_tran, e_deal, e_up, e_abnormal, e_tran + e_deal + e_up + e_abnormal)
