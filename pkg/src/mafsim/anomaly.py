"""Anomaly arrival process and per-round detection bookkeeping.

Rounds and monitoring windows are half-open: round k covers
``[(k-1)T, kT)`` and monitors ``[(k-1)T, (k-1)T + t1)``. An event that lands
in the dormant tail of a round stays undetected until the next round starts
monitoring at ``kT``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from mafsim.energy import SystemConfig
from mafsim.errors import ConstraintViolation

PERIODIC = "periodic"
UNIFORM = "uniform"
MODES = (PERIODIC, UNIFORM)


@dataclass(frozen=True)
class AnomalyEvent:
    occurrence_time: float
    affected_devices: tuple[int, ...]
    detected_time: float | None = None


@dataclass(frozen=True)
class AnomalyTimeline:
    events: tuple[AnomalyEvent, ...]
    horizon: float
    mode: str = PERIODIC
    seed: int = 0
    _times: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        times = tuple(e.occurrence_time for e in self.events)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("events must be strictly increasing in time")
        object.__setattr__(self, "_times", times)

    def __len__(self):
        return len(self.events)

    @property
    def times(self) -> tuple[float, ...]:
        return self._times

    def cumulative_count_at(self, t: float) -> int:
        """Number of events that occurred strictly before ``t``."""
        return bisect.bisect_left(self._times, t)

    def events_between(self, start: float, end: float) -> tuple[AnomalyEvent, ...]:
        """Events with ``start <= time < end``."""
        lo = bisect.bisect_left(self._times, start)
        hi = bisect.bisect_left(self._times, end)
        return self.events[lo:hi]

    def to_text(self) -> str:
        lines = [f"# mafsim-timeline v1 mode={self.mode} seed={self.seed} horizon={self.horizon!r}"]
        for ev in self.events:
            lines.append(f"{ev.occurrence_time!r}\t{','.join(str(d) for d in ev.affected_devices)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AnomalyTimeline":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# mafsim-timeline v1"):
            raise ValueError("not a mafsim timeline (missing header)")
        meta = dict(item.split("=", 1) for item in lines[0].split()[3:])
        events = []
        for line in lines[1:]:
            if not line.strip() or line.startswith("#"):
                continue
            time_s, _, devs = line.partition("\t")
            devices = tuple(int(d) for d in devs.split(",") if d)
            events.append(AnomalyEvent(float(time_s), devices))
        return cls(tuple(events), float(meta["horizon"]), meta["mode"], int(meta["seed"]))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "AnomalyTimeline":
        return cls.from_text(Path(path).read_text())


def build_timeline(config: SystemConfig, horizon: float, mode: str = PERIODIC,
                   seed: int = 0) -> AnomalyTimeline:
    """Generate every anomaly event in ``(0, horizon]``.

    ``periodic`` places event j at exactly ``j * T'``; ``uniform`` draws
    inter-arrival gaps from U(0, 2T') so the mean spacing is still T'.
    Each event hits ``abnormal_device_count`` distinct devices drawn without
    replacement.
    """
    if mode not in MODES:
        raise ValueError(f"unknown timeline mode {mode!r}; expected one of {MODES}")
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    interval = config.anomaly_interval
    rng = np.random.default_rng(seed)
    n, size = config.devices_per_slice, config.abnormal_device_count
    times = []
    if mode == PERIODIC:
        j = 1
        while j * interval <= horizon:
            times.append(j * interval)
            j += 1
    else:
        t = 0.0
        while True:
            gap = rng.uniform(0.0, 2.0 * interval)
            while gap == 0.0:
                gap = rng.uniform(0.0, 2.0 * interval)
            t += gap
            if t > horizon:
                break
            times.append(t)
    events = []
    for t in times:
        devices = np.sort(rng.choice(n, size=size, replace=False))
        events.append(AnomalyEvent(float(t), tuple(int(d) for d in devices)))
    return AnomalyTimeline(tuple(events), float(horizon), mode, int(seed))


@dataclass(frozen=True)
class RoundResolution:
    caught: tuple[AnomalyEvent, ...]
    missed: tuple[tuple[AnomalyEvent, float], ...]
    cumulative_count: int

    @property
    def n_caught(self) -> int:
        return len(self.caught)

    @property
    def n_events(self) -> int:
        return len(self.caught) + len(self.missed)


def resolve_round(timeline: AnomalyTimeline, k: int, t1: float, round_duration: float) -> RoundResolution:
    """Split the events of round ``k`` (1-based) into caught and missed.

    Missed events carry their persistence ``t3 = kT - occurrence_time`` and a
    ``detected_time`` of ``kT``. ``cumulative_count`` is the number of events
    before the end of this round's monitoring window.
    """
    if k < 1:
        raise ConstraintViolation("round index starts at 1")
    if not 1 <= t1 <= round_duration:
        raise ConstraintViolation(f"t1={t1} outside [1, {round_duration}]")
    start = (k - 1) * round_duration
    monitor_end = start + t1
    end = k * round_duration
    caught = tuple(replace(ev, detected_time=ev.occurrence_time)
                   for ev in timeline.events_between(start, monitor_end))
    missed = tuple((replace(ev, detected_time=end), end - ev.occurrence_time)
                   for ev in timeline.events_between(monitor_end, end))
    return RoundResolution(caught, missed, timeline.cumulative_count_at(monitor_end))
