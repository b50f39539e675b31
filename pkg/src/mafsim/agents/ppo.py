"""PPO-clip with a Gaussian policy over the normalized monitoring duration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from mafsim.agents.base import (Agent, pack_net, pack_optimizer, unpack_net,
                                unpack_optimizer)
from mafsim.env import DormancyEnv, RoundOutcome
from mafsim.errors import NonFiniteError
from mafsim.rl.nn import MLP, Adam, clip_by_global_norm
from mafsim.rl.policy import (Trajectory, gaussian_log_prob, gaussian_policy,
                              ppo_clip_objective, value_loss)

log = logging.getLogger(__name__)


@dataclass
class PPOParams:
    hidden: tuple = (64, 64)
    gamma: float = 0.99
    lam: float = 0.95
    clip_epsilon: float = 0.2
    policy_lr: float = 3e-4
    value_lr: float = 1e-3
    epochs: int = 4
    batch_episodes: int = 20
    minibatch_size: int = 10
    max_grad_norm: float = 0.5
    reward_scale: float = 1000.0
    init_log_std: float = 0.0
    entropy_coef: float = 0.0
    normalize_advantages: bool = True


class PPOAgent(Agent):
    """Actor-critic trained with the clipped surrogate.

    The policy is a Gaussian over a raw action ``u`` in normalized units:
    ``u = 0`` is the middle of [1, T] and ``u = +-1`` its ends. The
    environment receives ``center + half_range * u`` minutes and clamps it.
    The log-std is a free parameter shared by all states.
    """

    tag = "ppo"

    def __init__(self, env: DormancyEnv, params: PPOParams | None = None, seed: int = 0,
                 total_rounds: int = 15000):
        super().__init__(env, seed, total_rounds)
        self.params = params or PPOParams()
        p = self.params
        init_rng, self.rng = (np.random.default_rng(s) for s in
                              np.random.SeedSequence(self.seed).spawn(2))
        sizes = (self.obs_size, *p.hidden, 1)
        self.policy = MLP(sizes, init_rng, output_scale=0.01)
        self.value = MLP(sizes, init_rng)
        self.log_std = np.array([float(p.init_log_std)])
        self.policy_opt = Adam(self.policy.params + [self.log_std], lr=p.policy_lr)
        self.value_opt = Adam(self.value.params, lr=p.value_lr)
        self.buffer = Trajectory(p.gamma, p.lam)
        self.episodes_in_buffer = 0
        self.iterations = 0

    def policy_mean(self, state) -> float:
        return float(self.policy.forward(self.normalize_obs(state))[0])

    def act(self, state, explore: bool = True):
        obs = self.normalize_obs(state)
        mean = float(self.policy.forward(obs)[0])
        if not explore:
            return float(self.scale.to_minutes(mean)), {}
        u, logp = gaussian_policy(mean, self.log_std[0], rng=self.rng)
        value = float(self.value.forward(obs)[0])
        return float(self.scale.to_minutes(u)), {"u": float(u), "log_prob": float(logp),
                                                 "value": value}

    def observe(self, state, info: dict, outcome: RoundOutcome) -> dict:
        self.buffer.add(self.normalize_obs(state), info["u"], outcome.t1,
                        outcome.reward * self.params.reward_scale, info["value"],
                        info["log_prob"])
        return {}

    def end_episode(self, final_state) -> dict:
        # episodes end on a round budget, not a terminal state, so bootstrap
        final_value = float(self.value.forward(self.normalize_obs(final_state))[0])
        self.buffer.end_episode(final_value)
        self.episodes_in_buffer += 1
        if self.episodes_in_buffer >= self.params.batch_episodes:
            return self.update()
        return {}

    def train_iteration(self, env: DormancyEnv, timelines) -> dict:
        """Collect one batch of episodes (one per timeline) and run the update."""
        rewards, energies, t1s, caught, events = [], [], [], 0, 0
        metrics = {}
        for timeline in timelines:
            result = self.run_episode(env, timeline, train=True)
            metrics.update(result.learn_metrics)
            for o in result.outcomes:
                rewards.append(o.reward)
                energies.append(o.energy.total)
                t1s.append(o.t1)
                caught += o.caught
                events += o.total_events
        if self.episodes_in_buffer:
            metrics.update(self.update())
        minutes = len(energies) * self.round_duration
        metrics.update({
            "mean_reward": float(np.mean(rewards)),
            "energy_per_minute": float(np.sum(energies) / minutes),
            "accuracy": 1.0 if events == 0 else caught / events,
            "mean_t1": float(np.mean(t1s)),
        })
        return metrics

    def _policy_grads(self, obs, u, old_logp, adv):
        mean_out, cache = self.policy.forward_cache(obs)
        mean = mean_out[:, 0]
        log_std = self.log_std[0]
        new_logp = gaussian_log_prob(u, mean, log_std)
        objective, d_logp = ppo_clip_objective(new_logp, old_logp, adv, self.params.clip_epsilon)
        std2 = math.exp(2.0 * log_std)
        d_mean = d_logp * (u - mean) / std2
        d_log_std = float(np.sum(d_logp * ((u - mean) ** 2 / std2 - 1.0)))
        # entropy of a Gaussian is log_std + const per sample
        d_log_std += self.params.entropy_coef
        grads = self.policy.backward(cache, d_mean[:, None])
        return objective, grads + [np.array([d_log_std])]

    def update(self) -> dict:
        """Value regression then clipped-surrogate ascent on the collected batch."""
        p = self.params
        buf = self.buffer
        obs = np.stack(buf.states)
        u = np.asarray(buf.raw_actions)
        old_logp = np.asarray(buf.log_probs)
        returns, adv = buf.returns_and_advantages(normalize=p.normalize_advantages)
        n = len(u)
        snapshot = ([a.copy() for a in self.policy.params], self.log_std.copy(),
                    [a.copy() for a in self.value.params])
        objectives, vlosses = [], []
        try:
            for _ in range(p.epochs):
                order = self.rng.permutation(n)
                for start in range(0, n, p.minibatch_size):
                    idx = order[start:start + p.minibatch_size]
                    v_out, v_cache = self.value.forward_cache(obs[idx])
                    vl, dv = value_loss(v_out[:, 0], returns[idx])
                    v_grads = clip_by_global_norm(self.value.backward(v_cache, dv[:, None]),
                                                  p.max_grad_norm)
                    self.value_opt.step(self.value.params, v_grads)
                    obj, pi_grads = self._policy_grads(obs[idx], u[idx], old_logp[idx], adv[idx])
                    if not (math.isfinite(obj) and math.isfinite(vl)):
                        raise NonFiniteError("non-finite PPO loss")
                    pi_grads = clip_by_global_norm(pi_grads, p.max_grad_norm)
                    self.policy_opt.step(self.policy.params + [self.log_std], pi_grads,
                                         ascent=True)
                    objectives.append(obj)
                    vlosses.append(vl)
        except NonFiniteError as exc:
            log.warning("PPO iteration aborted: %s", exc)
            self.policy.load_params(snapshot[0])
            self.log_std[:] = snapshot[1]
            self.value.load_params(snapshot[2])
            objectives, vlosses = [float("nan")], [float("nan")]
        self.buffer = Trajectory(p.gamma, p.lam)
        self.episodes_in_buffer = 0
        self.iterations += 1
        return {"policy_objective": float(np.mean(objectives)),
                "value_loss": float(np.mean(vlosses)),
                "log_std": float(self.log_std[0])}

    def state_dict(self):
        out = super().state_dict()
        out.update(pack_net("policy", self.policy))
        out["policy/log_std"] = self.log_std
        out.update(pack_net("value", self.value))
        out.update(pack_optimizer("policy_opt", self.policy_opt))
        out.update(pack_optimizer("value_opt", self.value_opt))
        return out

    def load_state_dict(self, tensors):
        super().load_state_dict(tensors)
        unpack_net("policy", self.policy, tensors)
        self.log_std = np.array(tensors["policy/log_std"], dtype=float)
        unpack_net("value", self.value, tensors)
        unpack_optimizer("policy_opt", self.policy_opt, tensors)
        unpack_optimizer("value_opt", self.value_opt, tensors)
