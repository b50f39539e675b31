"""DQN baseline over integer monitoring durations 1..T."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from mafsim.agents.base import (Agent, pack_net, pack_optimizer, unpack_net,
                                unpack_optimizer)
from mafsim.agents.replay import ReplayBuffer
from mafsim.env import DormancyEnv, RoundOutcome
from mafsim.errors import ConfigError, NonFiniteError
from mafsim.rl.nn import MLP, Adam, clip_by_global_norm

log = logging.getLogger(__name__)


@dataclass
class DQNParams:
    hidden: tuple = (64, 64)
    gamma: float = 0.99
    lr: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.5
    replay_capacity: int = 100_000
    batch_size: int = 64
    target_sync: int = 200
    reward_scale: float = 1000.0
    max_grad_norm: float = 10.0


class DQNAgent(Agent):
    tag = "dqn"

    def __init__(self, env: DormancyEnv, params: DQNParams | None = None, seed: int = 0,
                 total_rounds: int = 15000):
        super().__init__(env, seed, total_rounds)
        self.params = p = params or DQNParams()
        n_actions = int(round(self.round_duration))
        if n_actions != self.round_duration:
            raise ConfigError("DQN needs an integer round duration (1-minute action grid)")
        self.n_actions = n_actions
        init_seed, act_seed, replay_seed = np.random.SeedSequence(self.seed).spawn(3)
        self.q = MLP((self.obs_size, *p.hidden, n_actions), np.random.default_rng(init_seed))
        self.q_target = self.q.copy()
        self.opt = Adam(self.q.params, lr=p.lr)
        self.rng = np.random.default_rng(act_seed)
        self.replay = ReplayBuffer(p.replay_capacity, self.obs_size,
                                   int(replay_seed.generate_state(1)[0]))
        self.steps = 0

    @property
    def epsilon(self) -> float:
        p = self.params
        horizon = max(p.epsilon_decay_fraction * self.total_rounds, 1.0)
        frac = min(1.0, self.rounds_seen / horizon)
        return p.epsilon_start + (p.epsilon_end - p.epsilon_start) * frac

    def q_values(self, state) -> np.ndarray:
        return self.q.forward(self.normalize_obs(state))

    def act(self, state, explore: bool = True):
        if explore and self.rng.random() < self.epsilon:
            index = int(self.rng.integers(self.n_actions))
        else:
            # np.argmax returns the lowest index among ties
            index = int(np.argmax(self.q_values(state)))
        return float(index + 1), {"index": index}

    def observe(self, state, info: dict, outcome: RoundOutcome) -> dict:
        return self.step((self.normalize_obs(state), info["index"],
                          outcome.reward * self.params.reward_scale,
                          self.normalize_obs(outcome.state_next), False))

    def td_targets(self, rewards, next_states, dones) -> np.ndarray:
        next_q = self.q_target.forward(next_states)
        return rewards + self.params.gamma * (1.0 - dones) * next_q.max(axis=1)

    def step(self, transition) -> dict:
        """Store one transition and take one TD step once the buffer holds a batch."""
        p = self.params
        self.replay.add(*transition)
        self.steps += 1
        metrics = {"epsilon": self.epsilon}
        if len(self.replay) >= p.batch_size:
            s, a, r, s2, d = self.replay.sample(p.batch_size)
            targets = self.td_targets(r, s2, d)
            q, cache = self.q.forward_cache(s)
            rows = np.arange(len(a))
            idx = a.astype(int)
            err = q[rows, idx] - targets
            grad_out = np.zeros_like(q)
            grad_out[rows, idx] = 2.0 * err / len(a)
            grads = clip_by_global_norm(self.q.backward(cache, grad_out), p.max_grad_norm)
            try:
                self.opt.step(self.q.params, grads)
            except NonFiniteError as exc:
                log.warning("DQN step skipped: %s", exc)
            metrics["td_loss"] = float(np.mean(err * err))
        if self.steps % p.target_sync == 0:
            self.q_target = self.q.copy()
        return metrics

    def state_dict(self):
        out = super().state_dict()
        out.update(pack_net("q", self.q))
        out.update(pack_net("q_target", self.q_target))
        out.update(pack_optimizer("opt", self.opt))
        return out

    def load_state_dict(self, tensors):
        super().load_state_dict(tensors)
        unpack_net("q", self.q, tensors)
        unpack_net("q_target", self.q_target, tensors)
        unpack_optimizer("opt", self.opt, tensors)
