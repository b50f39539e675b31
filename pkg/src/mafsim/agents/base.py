from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mafsim.anomaly import AnomalyTimeline
from mafsim.env import DormancyEnv, RoundOutcome
from mafsim.errors import CheckpointError
from mafsim.rl import checkpoint


@dataclass
class EpisodeResult:
    outcomes: list[RoundOutcome]
    learn_metrics: dict = field(default_factory=dict)


class ActionScale:
    """Maps between monitoring minutes and the normalized interval [-1, 1]."""

    def __init__(self, round_duration: float):
        self.low, self.high = 1.0, float(round_duration)
        self.center = 0.5 * (self.low + self.high)
        self.half = max(0.5 * (self.high - self.low), 1e-9)

    def to_minutes(self, u):
        return self.center + self.half * u

    def to_unit(self, minutes):
        return (np.asarray(minutes, dtype=float) - self.center) / self.half


class Agent:
    """Common act/learn surface shared by every policy.

    Subclasses implement ``act`` and may override ``observe`` (called after
    every training step) and ``end_episode``. Observations are divided by the
    round duration before they reach any network.
    """

    tag = "base"

    def __init__(self, env: DormancyEnv, seed: int = 0, total_rounds: int = 15000):
        self.obs_size = env.observation_size
        self.round_duration = env.round_duration
        self.scale = ActionScale(env.round_duration)
        self.seed = int(seed)
        self.total_rounds = int(total_rounds)
        self.rounds_seen = 0

    def normalize_obs(self, state) -> np.ndarray:
        return np.asarray(state, dtype=float) / self.round_duration

    def act(self, state, explore: bool = True) -> tuple[float, dict]:
        raise NotImplementedError

    def greedy_action(self, state) -> float:
        return float(np.clip(self.act(state, explore=False)[0], 1.0, self.round_duration))

    def observe(self, state, info: dict, outcome: RoundOutcome) -> dict:
        return {}

    def end_episode(self, final_state) -> dict:
        return {}

    def run_episode(self, env: DormancyEnv, timeline: AnomalyTimeline,
                    train: bool = True) -> EpisodeResult:
        state = env.reset(timeline)
        outcomes = []
        metrics: dict = {}
        while not env.done:
            action, info = self.act(state, explore=train)
            outcome = env.step(action)
            if train:
                self.rounds_seen += 1
                metrics.update(self.observe(state, info, outcome))
            outcomes.append(outcome)
            state = outcome.state_next
        if train:
            metrics.update(self.end_episode(state))
        return EpisodeResult(outcomes, metrics)

    # checkpoint support

    def state_dict(self) -> dict[str, np.ndarray]:
        return {"rounds_seen": np.array(float(self.rounds_seen))}

    def load_state_dict(self, tensors: dict[str, np.ndarray]) -> None:
        self.rounds_seen = int(tensors["rounds_seen"])

    def save(self, path, meta: dict | None = None) -> None:
        meta = dict(meta or {})
        meta.update({"agent": self.tag, "seed": self.seed, "obs_size": self.obs_size,
                     "round_duration": self.round_duration})
        checkpoint.save(path, self.state_dict(), meta)

    def load(self, path) -> dict:
        tensors, meta = checkpoint.load(path)
        if meta.get("agent") != self.tag:
            raise CheckpointError(f"checkpoint is for agent {meta.get('agent')!r}, not {self.tag!r}")
        checkpoint.check_shapes(self.state_dict(), tensors)
        self.load_state_dict(tensors)
        return meta


def pack_optimizer(prefix: str, opt) -> dict[str, np.ndarray]:
    out = {f"{prefix}/t": np.array(float(opt.t))}
    for i, (m, v) in enumerate(zip(opt.m, opt.v)):
        out[f"{prefix}/m{i}"] = m
        out[f"{prefix}/v{i}"] = v
    return out


def unpack_optimizer(prefix: str, opt, tensors) -> None:
    n = len(opt.m)
    opt.load_state({"t": int(tensors[f"{prefix}/t"]),
                    "m": [tensors[f"{prefix}/m{i}"] for i in range(n)],
                    "v": [tensors[f"{prefix}/v{i}"] for i in range(n)]})


def pack_net(prefix: str, net) -> dict[str, np.ndarray]:
    out = {}
    for i, p in enumerate(net.params):
        out[f"{prefix}/{'W' if i % 2 == 0 else 'b'}{i // 2}"] = p
    return out


def unpack_net(prefix: str, net, tensors) -> None:
    net.load_params([tensors[f"{prefix}/{'W' if i % 2 == 0 else 'b'}{i // 2}"]
                     for i in range(len(net.params))])
