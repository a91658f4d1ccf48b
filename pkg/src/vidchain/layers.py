"""Dense layers over flattened frames: initialization and application.

An MLP here is a flat list of trainable Tensors [W0, b0, W1, b1, ...] with
tanh between layers and a linear final layer.  Weights draw from
N(0, 1/n_in); biases draw from N(0, bias_init^2) — deliberately *not* zero,
so an untrained model maps zero latents to a nonzero signal (a meaningful
baseline for before/after-training comparisons).
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .rng import RandomStream

__all__ = ["init_mlp", "apply_mlp", "param_count"]


def init_mlp(stream: RandomStream, sizes, bias_init: float) -> list[Tensor]:
    """Trainable parameters for layer widths `sizes` = [n_in, ..., n_out]."""
    params: list[Tensor] = []
    for i in range(len(sizes) - 1):
        n_in, n_out = sizes[i], sizes[i + 1]
        w = stream.split(f"w{i}").normal((n_in, n_out), scale=1.0 / np.sqrt(n_in))
        b = stream.split(f"b{i}").normal((n_out,), scale=bias_init)
        params.append(Tensor(w, requires_grad=True))
        params.append(Tensor(b, requires_grad=True))
    return params


def apply_mlp(params: list[Tensor], x: Tensor) -> Tensor:
    """tanh-activated hidden layers, linear output; x is (batch, n_in)."""
    n_layers = len(params) // 2
    for i in range(n_layers):
        x = ad.affine(x, params[2 * i], params[2 * i + 1])
        if i < n_layers - 1:
            x = ad.tanh(x)
    return x


def param_count(params) -> int:
    return sum(p.size for p in params)
