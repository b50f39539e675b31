"""Small numpy MLPs with hand-written backprop and an Adam optimizer."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from mafsim.errors import NonFiniteError


class MLP:
    """Fully connected net: tanh on hidden layers, identity on the output.

    Parameters are stored as a flat list ``[W0, b0, W1, b1, ...]`` with
    ``W`` of shape ``(fan_in, fan_out)``. Inputs may be a single vector or a
    batch of row vectors.
    """

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator | None = None,
                 output_scale: float = 1.0):
        if len(sizes) < 2:
            raise ValueError("need at least an input and an output size")
        self.sizes = tuple(int(s) for s in sizes)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params: list[np.ndarray] = []
        n_layers = len(self.sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            scale = np.sqrt(1.0 / fan_in)
            if i == n_layers - 1:
                scale *= output_scale
            self.params.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.params.append(np.zeros(fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.params) // 2

    def copy(self) -> "MLP":
        clone = MLP.__new__(MLP)
        clone.sizes = self.sizes
        clone.params = [p.copy() for p in self.params]
        return clone

    def load_params(self, params: Sequence[np.ndarray]) -> None:
        if len(params) != len(self.params):
            raise ValueError(f"expected {len(self.params)} tensors, got {len(params)}")
        for i, (old, new) in enumerate(zip(self.params, params)):
            if old.shape != np.shape(new):
                raise ValueError(f"layer {i // 2} {'W' if i % 2 == 0 else 'b'}: "
                                 f"shape {np.shape(new)} != {old.shape}")
        self.params = [np.array(p, dtype=float) for p in params]

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0]:
            raise ValueError(f"input width {x.shape[-1]} != {self.sizes[0]}")
        return x

    def forward(self, x) -> np.ndarray:
        h = self._check_input(x)
        n = self.n_layers
        for i in range(n):
            h = h @ self.params[2 * i] + self.params[2 * i + 1]
            if i < n - 1:
                h = np.tanh(h)
        return h

    def forward_cache(self, x):
        """Forward pass that also returns the activations needed by ``backward``."""
        h = self._check_input(x)
        acts = [h]
        n = self.n_layers
        for i in range(n):
            h = h @ self.params[2 * i] + self.params[2 * i + 1]
            if i < n - 1:
                h = np.tanh(h)
            acts.append(h)
        return h, acts

    def backward(self, cache, grad_out, need_input_grad: bool = False):
        """Gradients of ``sum(output * grad_out)`` w.r.t. every parameter.

        Returns the list of parameter gradients, plus the input gradient when
        ``need_input_grad`` is set.
        """
        acts = cache
        g = np.asarray(grad_out, dtype=float)
        batched = acts[0].ndim == 2
        grads: list[np.ndarray] = [None] * len(self.params)
        for i in reversed(range(self.n_layers)):
            inp = acts[i]
            if batched:
                grads[2 * i] = inp.T @ g
                grads[2 * i + 1] = g.sum(axis=0)
            else:
                grads[2 * i] = np.outer(inp, g)
                grads[2 * i + 1] = g.copy()
            if i > 0 or need_input_grad:
                g = g @ self.params[2 * i].T
                if i > 0:
                    g = g * (1.0 - inp ** 2)
        if need_input_grad:
            return grads, g
        return grads


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_by_global_norm(grads: Sequence[np.ndarray], max_norm: float) -> list[np.ndarray]:
    norm = global_norm(grads)
    if max_norm is None or norm <= max_norm or norm == 0.0:
        return list(grads)
    scale = max_norm / norm
    return [g * scale for g in grads]


class Adam:
    """Bias-corrected Adam over a fixed list of parameter arrays (updated in place)."""

    def __init__(self, params: Sequence[np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
             ascent: bool = False) -> None:
        if len(grads) != len(params):
            raise ValueError("gradient list does not match parameter list")
        for p, g in zip(params, grads):
            if p.shape != np.shape(g):
                raise ValueError(f"gradient shape {np.shape(g)} != parameter shape {p.shape}")
            if not np.all(np.isfinite(g)):
                raise NonFiniteError("non-finite gradient; Adam update rejected")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        sign = 1.0 if ascent else -1.0
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p += sign * self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)

    def state(self) -> dict:
        return {"t": self.t, "m": [a.copy() for a in self.m], "v": [a.copy() for a in self.v]}

    def load_state(self, state: dict) -> None:
        if len(state["m"]) != len(self.m):
            raise ValueError("optimizer state does not match parameter list")
        for i, (old, new) in enumerate(zip(self.m, state["m"])):
            if old.shape != np.shape(new):
                raise ValueError(f"optimizer moment {i}: shape {np.shape(new)} != {old.shape}")
        self.t = int(state["t"])
        self.m = [np.array(a, dtype=float) for a in state["m"]]
        self.v = [np.array(a, dtype=float) for a in state["v"]]
