"""Adam with bias correction, in a functional style.

`adam_step` consumes immutable parameter Tensors plus raw gradient arrays and
returns fresh parameter Tensors; the AdamState's moment accumulators and step
counter are updated in place.  Identical (state, params, grads) triples
produce bit-identical results.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor

__all__ = ["AdamState", "adam_step"]


class AdamState:
    """Per-parameter first/second moment accumulators and a step counter."""

    def __init__(self, lr: float = 2e-4, beta1: float = 0.5,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def state_arrays(self) -> dict:
        """Accumulators as named arrays (for checkpointing)."""
        out = {"step": np.array([float(self.step)])}
        for i, (m, v) in enumerate(zip(self.m or [], self.v or [])):
            out[f"m{i}"] = m
            out[f"v{i}"] = v
        return out

    def load_state_arrays(self, arrays: dict) -> None:
        self.step = int(arrays["step"][0])
        n = len([k for k in arrays if k.startswith("m")])
        # n == 0 means the optimizer had not taken a step yet: keep the
        # accumulators unallocated so the next step lazily sizes them.
        self.m = [np.array(arrays[f"m{i}"]) for i in range(n)] if n else None
        self.v = [np.array(arrays[f"v{i}"]) for i in range(n)] if n else None


def adam_step(state: AdamState, params, grads) -> list[Tensor]:
    """One bias-corrected Adam update; returns the new parameter Tensors."""
    params = list(params)
    grads = [np.asarray(g, dtype=np.float64) for g in grads]
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
    if state.m is None:
        state.m = [np.zeros(p.shape) for p in params]
        state.v = [np.zeros(p.shape) for p in params]
    if len(state.m) != len(params):
        raise ValueError("optimizer state does not match parameter count")

    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * (g * g)
        m_hat = state.m[i] / (1.0 - b1 ** t)
        v_hat = state.v[i] / (1.0 - b2 ** t)
        out.append(Tensor(p.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps),
                          requires_grad=True))
    return out
