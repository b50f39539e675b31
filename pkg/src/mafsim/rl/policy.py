"""Policy-gradient pieces: Gaussian head, GAE, clipped surrogate, value regression."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def gaussian_log_prob(action, mean, log_std):
    """Log-density of N(mean, exp(log_std)^2) at ``action`` (elementwise)."""
    action = np.asarray(action, dtype=float)
    z = (action - mean) * np.exp(-log_std)
    return -0.5 * z * z - log_std - LOG_SQRT_2PI


def gaussian_policy(mean, log_std, raw_action=None, rng: np.random.Generator | None = None):
    """Sample a raw action and return ``(action, log_prob)``.

    When ``raw_action`` is given nothing is sampled; its log-probability under
    the current parameters is returned instead.
    """
    mean = np.asarray(mean, dtype=float)
    if raw_action is None:
        if rng is None:
            raise ValueError("sampling needs a seeded generator")
        raw_action = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
    raw_action = np.asarray(raw_action, dtype=float)
    return raw_action, gaussian_log_prob(raw_action, mean, log_std)


@dataclass
class Trajectory:
    """Rollout records of one or more episodes, in collection order."""

    gamma: float = 0.99
    lam: float = 0.95
    states: list = field(default_factory=list)
    raw_actions: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    # (start index, end index, bootstrap value) per finished episode
    segments: list = field(default_factory=list)
    _open: int = 0

    def add(self, state, raw_action, action, reward, value, log_prob) -> None:
        if not math.isfinite(log_prob):
            raise ValueError("log-probability must be finite")
        self.states.append(np.asarray(state, dtype=float))
        self.raw_actions.append(float(raw_action))
        self.actions.append(float(action))
        self.rewards.append(float(reward))
        self.values.append(float(value))
        self.log_probs.append(float(log_prob))

    def end_episode(self, final_value: float = 0.0) -> None:
        self.segments.append((self._open, len(self.rewards), float(final_value)))
        self._open = len(self.rewards)

    def __len__(self):
        return len(self.rewards)

    def returns_and_advantages(self, normalize: bool = True):
        if self._open != len(self.rewards):
            raise ValueError("last episode not closed; call end_episode()")
        rets, advs = [], []
        for start, end, final_value in self.segments:
            r, a = returns_and_advantages(self.rewards[start:end], self.values[start:end],
                                          final_value, self.gamma, self.lam, normalize=False)
            rets.append(r)
            advs.append(a)
        returns = np.concatenate(rets)
        adv = np.concatenate(advs)
        if normalize:
            adv = normalize_advantages(adv)
        return returns, adv


def returns_and_advantages(rewards, values, final_value: float = 0.0, gamma: float = 0.99,
                           lam: float = 0.95, normalize: bool = True):
    """Discounted returns and GAE(lambda) advantages for one episode.

    ``final_value`` bootstraps both quantities past the last record (use 0
    for a true terminal state).
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if rewards.size == 0:
        raise ValueError("empty trajectory")
    if values.shape != rewards.shape:
        raise ValueError("rewards and values must have the same length")
    n = rewards.size
    returns = np.empty(n)
    adv = np.empty(n)
    running = float(final_value)
    gae = 0.0
    next_value = float(final_value)
    for k in range(n - 1, -1, -1):
        running = rewards[k] + gamma * running
        returns[k] = running
        delta = rewards[k] + gamma * next_value - values[k]
        gae = delta + gamma * lam * gae
        adv[k] = gae
        next_value = values[k]
    if normalize:
        adv = normalize_advantages(adv)
    return returns, adv


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    adv = np.asarray(adv, dtype=float)
    if adv.size < 2:
        return adv - adv.mean() if adv.size else adv
    std = adv.std()
    if std < 1e-12:
        return adv - adv.mean()
    return (adv - adv.mean()) / std


def ppo_clip_objective(new_log_probs, old_log_probs, advantages, epsilon: float = 0.2):
    """Clipped surrogate ``mean(min(r*A, clip(r, 1-eps, 1+eps)*A))``.

    Returns the objective and its gradient w.r.t. ``new_log_probs``. Samples
    with a non-finite ratio are dropped from the mean (with a warning).
    """
    new = np.asarray(new_log_probs, dtype=float)
    old = np.asarray(old_log_probs, dtype=float)
    adv = np.asarray(advantages, dtype=float)
    if not (new.shape == old.shape == adv.shape):
        raise ValueError("log-prob and advantage arrays must have equal length")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must be in (0, 1)")
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = np.exp(new - old)
    ok = np.isfinite(ratio) & np.isfinite(adv)
    if not np.all(ok):
        log.warning("dropping %d samples with non-finite probability ratio", int(np.sum(~ok)))
    grad = np.zeros_like(new)
    count = int(np.sum(ok))
    if count == 0:
        return 0.0, grad
    r, a = ratio[ok], adv[ok]
    unclipped = r * a
    clipped = np.clip(r, 1.0 - epsilon, 1.0 + epsilon) * a
    objective = float(np.mean(np.minimum(unclipped, clipped)))
    # the clipped branch has zero slope whenever it is the one selected and actually clips
    active = (unclipped <= clipped) | ((r >= 1.0 - epsilon) & (r <= 1.0 + epsilon))
    g = np.where(active, r * a, 0.0) / count
    grad[ok] = g
    return objective, grad


def value_loss(values, returns):
    """Mean squared error and its gradient w.r.t. ``values``."""
    values = np.asarray(values, dtype=float)
    returns = np.asarray(returns, dtype=float)
    if values.size == 0:
        raise ValueError("empty value batch")
    if values.shape != returns.shape:
        raise ValueError("values and returns must have equal length")
    diff = values - returns
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size
