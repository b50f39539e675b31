"""Step/reset environment for choosing one monitoring duration per round."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from mafsim.anomaly import AnomalyTimeline, RoundResolution, resolve_round
from mafsim.energy import (EnergyBreakdown, SystemConfig, abnormal_energy, round_e1,
                           total_round_energy)
from mafsim.errors import ConfigError, UsageError

TRAJECTORY_COLUMNS = ("round", "t1", "e_tran", "e_deal", "e_up", "e2", "reward",
                      "caught", "total_events")


@dataclass(frozen=True)
class RoundOutcome:
    round_index: int
    raw_action: float
    t1: float
    energy: EnergyBreakdown
    reward: float
    caught: int
    total_events: int
    state_next: np.ndarray
    done: bool
    resolution: RoundResolution


def clamp_action(action, round_duration: float) -> float:
    return float(np.clip(float(action), 1.0, round_duration))


class DormancyEnv:
    """One monitored device cluster under a dormancy controller.

    The observation is the per-device vector of how long each device ran
    abnormally during the previous round (zero for healthy devices). With
    ``extended_observation`` the normalized round position is appended.

    The reward is ``1 / E_total``. ``accuracy_penalty`` subtracts a constant
    per missed event; it is off by default so the reward stays the plain
    inverse energy.
    """

    def __init__(self, config: SystemConfig, episode_length: int = 10,
                 extended_observation: bool = False, accuracy_penalty: float = 0.0):
        if episode_length < 1:
            raise ConfigError("episode_length must be >= 1")
        self.config = config
        # every instance models exactly one cluster; see make_slice_envs for M > 1
        self._slice_config = replace(config, slice_count=1)
        self.episode_length = int(episode_length)
        self.extended_observation = extended_observation
        self.accuracy_penalty = float(accuracy_penalty)
        self.timeline: AnomalyTimeline | None = None
        self._k = 0
        self._persistence = np.zeros(config.devices_per_slice)
        self.caught_total = 0
        self.events_total = 0

    @property
    def observation_size(self) -> int:
        return self.config.devices_per_slice + (1 if self.extended_observation else 0)

    @property
    def round_duration(self) -> float:
        return self.config.round_duration

    @property
    def done(self) -> bool:
        return self._k > self.episode_length

    @property
    def round_index(self) -> int:
        return self._k

    def _observe(self) -> np.ndarray:
        if not self.extended_observation:
            return self._persistence.copy()
        position = (self._k - 1) / self.episode_length
        return np.append(self._persistence, position)

    def reset(self, timeline: AnomalyTimeline) -> np.ndarray:
        needed = self.episode_length * self.config.round_duration
        if timeline.horizon < needed:
            raise ConfigError(f"timeline horizon {timeline.horizon} shorter than episode ({needed} min)")
        self.timeline = timeline
        self._k = 1
        self._persistence = np.zeros(self.config.devices_per_slice)
        self.caught_total = 0
        self.events_total = 0
        return self._observe()

    def step(self, action) -> RoundOutcome:
        if self.timeline is None:
            raise UsageError("call reset() before step()")
        if self.done:
            raise UsageError("episode finished; call reset()")
        cfg = self.config
        raw = float(np.asarray(action, dtype=float).reshape(-1)[0])
        t1 = clamp_action(raw, cfg.round_duration)
        res = resolve_round(self.timeline, self._k, t1, cfg.round_duration)

        persistence = np.zeros(cfg.devices_per_slice)
        entries = []
        for event, t3 in res.missed:
            for d in event.affected_devices:
                entries.append((d, t3))
                # a device hit twice in one dormancy keeps the longer outage
                persistence[d] = max(persistence[d], t3)
        e_tran, e_deal, e_up = round_e1(self._slice_config, t1)
        energy = total_round_energy(e_tran, e_deal, e_up, abnormal_energy(cfg, entries))
        reward = 1.0 / energy.total - self.accuracy_penalty * len(res.missed)

        self.caught_total += res.n_caught
        self.events_total += res.n_events
        self._persistence = persistence
        k = self._k
        self._k += 1
        return RoundOutcome(k, raw, t1, energy, reward, res.n_caught, res.n_events,
                            self._observe(), self.done, res)

    @property
    def vacuous_accuracy(self) -> bool:
        """True while no event has occurred, so ``accuracy()`` is 1.0 by definition."""
        return self.events_total == 0

    def accuracy(self) -> float:
        return accuracy_ratio(self.caught_total, self.events_total)


def accuracy_ratio(caught: int, total: int) -> float:
    """Fraction of faults caught inside a monitoring window; 1.0 when there were none."""
    if caught > total or caught < 0:
        raise ValueError("caught must be in [0, total]")
    return 1.0 if total == 0 else caught / total


def make_slice_envs(config: SystemConfig, **kwargs) -> list[DormancyEnv]:
    """One independent environment per slice, all sharing ``config``."""
    return [DormancyEnv(config, **kwargs) for _ in range(config.slice_count)]


def write_trajectory_csv(outcomes: Iterable[RoundOutcome], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for o in outcomes:
            e = o.energy
            writer.writerow([o.round_index, repr(o.t1), repr(e.e_tran), repr(e.e_deal),
                             repr(e.e_up), repr(e.e_abnormal), repr(o.reward), o.caught,
                             o.total_events])
