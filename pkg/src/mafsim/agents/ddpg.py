"""DDPG baseline with a tanh-bounded actor and Gaussian exploration noise."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from mafsim.agents.base import (Agent, pack_net, pack_optimizer, unpack_net,
                                unpack_optimizer)
from mafsim.agents.replay import ReplayBuffer
from mafsim.env import DormancyEnv, RoundOutcome
from mafsim.errors import NonFiniteError
from mafsim.rl.nn import MLP, Adam, clip_by_global_norm

log = logging.getLogger(__name__)


@dataclass
class DDPGParams:
    hidden: tuple = (64, 64)
    gamma: float = 0.99
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    noise_start: float = 0.3    # fraction of T
    noise_end: float = 0.02     # fraction of T
    noise_decay_fraction: float = 0.5
    replay_capacity: int = 100_000
    batch_size: int = 64
    polyak: float = 0.005
    reward_scale: float = 1000.0
    max_grad_norm: float = 10.0


def polyak_update(target: MLP, online: MLP, rate: float) -> None:
    """target <- rate * online + (1 - rate) * target, in place."""
    for t, o in zip(target.params, online.params):
        t *= 1.0 - rate
        t += rate * o


class DDPGAgent(Agent):
    tag = "ddpg"

    def __init__(self, env: DormancyEnv, params: DDPGParams | None = None, seed: int = 0,
                 total_rounds: int = 15000):
        super().__init__(env, seed, total_rounds)
        self.params = p = params or DDPGParams()
        init_seed, noise_seed, replay_seed = np.random.SeedSequence(self.seed).spawn(3)
        init_rng = np.random.default_rng(init_seed)
        self.actor = MLP((self.obs_size, *p.hidden, 1), init_rng, output_scale=0.01)
        self.critic = MLP((self.obs_size + 1, *p.hidden, 1), init_rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = Adam(self.actor.params, lr=p.actor_lr)
        self.critic_opt = Adam(self.critic.params, lr=p.critic_lr)
        self.rng = np.random.default_rng(noise_seed)
        self.replay = ReplayBuffer(p.replay_capacity, self.obs_size,
                                   int(replay_seed.generate_state(1)[0]))

    @property
    def noise_scale(self) -> float:
        """Exploration noise standard deviation in minutes."""
        p = self.params
        horizon = max(p.noise_decay_fraction * self.total_rounds, 1.0)
        frac = min(1.0, self.rounds_seen / horizon)
        return (p.noise_start + (p.noise_end - p.noise_start) * frac) * self.round_duration

    @staticmethod
    def _policy(net: MLP, obs) -> np.ndarray:
        return np.tanh(net.forward(obs))

    def act(self, state, explore: bool = True):
        a = float(self._policy(self.actor, self.normalize_obs(state))[0])
        minutes = float(self.scale.to_minutes(a))
        if explore and self.noise_scale > 0:
            minutes += self.noise_scale * float(self.rng.standard_normal())
        return minutes, {}

    def observe(self, state, info: dict, outcome: RoundOutcome) -> dict:
        a = float(self.scale.to_unit(outcome.t1))
        return self.step((self.normalize_obs(state), a,
                          outcome.reward * self.params.reward_scale,
                          self.normalize_obs(outcome.state_next), False))

    def critic_loss_and_grads(self, states, actions, targets):
        x = np.column_stack([states, actions])
        q, cache = self.critic.forward_cache(x)
        err = q[:, 0] - targets
        loss = float(np.mean(err * err))
        grads = self.critic.backward(cache, (2.0 * err / len(err))[:, None])
        return loss, grads

    def actor_objective_and_grads(self, states):
        """Mean critic value of the actor's actions and its gradient w.r.t. actor params."""
        pre, a_cache = self.actor.forward_cache(states)
        a = np.tanh(pre)
        x = np.column_stack([states, a])
        q, c_cache = self.critic.forward_cache(x)
        n = len(states)
        _, dx = self.critic.backward(c_cache, np.full((n, 1), 1.0 / n), need_input_grad=True)
        d_pre = dx[:, -1:] * (1.0 - a ** 2)
        return float(np.mean(q)), self.actor.backward(a_cache, d_pre)

    def step(self, transition) -> dict:
        p = self.params
        self.replay.add(*transition)
        metrics = {"noise": self.noise_scale}
        if len(self.replay) < p.batch_size:
            return metrics
        s, a, r, s2, d = self.replay.sample(p.batch_size)
        next_q = self.critic_target.forward(
            np.column_stack([s2, self._policy(self.actor_target, s2)]))[:, 0]
        targets = r + p.gamma * (1.0 - d) * next_q
        try:
            loss, c_grads = self.critic_loss_and_grads(s, a, targets)
            self.critic_opt.step(self.critic.params, clip_by_global_norm(c_grads, p.max_grad_norm))
            q_mean, a_grads = self.actor_objective_and_grads(s)
            self.actor_opt.step(self.actor.params, clip_by_global_norm(a_grads, p.max_grad_norm),
                                ascent=True)
        except NonFiniteError as exc:
            log.warning("DDPG step skipped: %s", exc)
            return metrics
        polyak_update(self.actor_target, self.actor, p.polyak)
        polyak_update(self.critic_target, self.critic, p.polyak)
        metrics.update({"critic_loss": loss, "q_mean": q_mean})
        return metrics

    def state_dict(self):
        out = super().state_dict()
        for name in ("actor", "critic", "actor_target", "critic_target"):
            out.update(pack_net(name, getattr(self, name)))
        out.update(pack_optimizer("actor_opt", self.actor_opt))
        out.update(pack_optimizer("critic_opt", self.critic_opt))
        return out

    def load_state_dict(self, tensors):
        super().load_state_dict(tensors)
        for name in ("actor", "critic", "actor_target", "critic_target"):
            unpack_net(name, getattr(self, name), tensors)
        unpack_optimizer("actor_opt", self.actor_opt, tensors)
        unpack_optimizer("critic_opt", self.critic_opt, tensors)
