from __future__ import annotations

import numpy as np


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions with seeded uniform sampling."""

    def __init__(self, capacity: int, obs_size: int, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        # storage grows geometrically up to capacity
        n = min(self.capacity, 1024)
        self.states = np.zeros((n, obs_size))
        self.next_states = np.zeros((n, obs_size))
        self.actions = np.zeros(n)
        self.rewards = np.zeros(n)
        self.dones = np.zeros(n)
        self.size = 0
        self._next = 0
        self.rng = np.random.default_rng(seed)

    def __len__(self):
        return self.size

    def add(self, state, action, reward, next_state, done) -> None:
        i = self._next
        if i >= len(self.actions):
            self._grow()
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = float(done)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _grow(self) -> None:
        n = min(self.capacity, 2 * len(self.actions))
        for name in ("states", "next_states", "actions", "rewards", "dones"):
            old = getattr(self, name)
            new = np.zeros((n, *old.shape[1:]))
            new[:len(old)] = old
            setattr(self, name, new)

    def sample(self, batch_size: int):
        if self.size < batch_size:
            raise ValueError(f"only {self.size} transitions stored, need {batch_size}")
        idx = self.rng.integers(0, self.size, size=batch_size)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.dones[idx])
