"""Adam over a :class:`ParamSet`."""
from __future__ import annotations

import numpy as np

from .layers import ParamSet


class Adam:
    def __init__(self, params: ParamSet, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(p.value) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.value) for k, p in params.items()}

    def step(self, grads: dict | None = None) -> None:
        grads = self.params.grads() if grads is None else grads
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, p in self.params.items():
            g = grads[k]
            m = self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            v = self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            p.value = p.value - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_arrays(self, prefix: str) -> dict:
        out = {}
        for k in self.params:
            out[f"{prefix}.m/{k}"] = self.m[k]
            out[f"{prefix}.v/{k}"] = self.v[k]
        return out

    def load_state(self, arrays: dict, prefix: str, t: int) -> None:
        for k in self.params:
            self.m[k] = np.array(arrays[f"{prefix}.m/{k}"], dtype=np.float64)
            self.v[k] = np.array(arrays[f"{prefix}.v/{k}"], dtype=np.float64)
        self.t = int(t)


def clip_by_norm(grads: dict, max_norm: float) -> dict:
    norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if norm <= max_norm or norm == 0.0:
        return grads
    k = max_norm / norm
    return {name: g * k for name, g in grads.items()}
