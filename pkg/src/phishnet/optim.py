"""Adam with bias-corrected moment estimates.

Learning rate defaults to 0.0015; the moment constants are the optimizer's
published defaults. Frozen tensors (padding embedding rows, indicator
embeddings) receive zero gradients upstream, so their moments stay zero and
the step leaves them untouched; the padding rows are re-zeroed afterwards
anyway as a belt-and-braces measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .model import ModelParams


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    lr: float = 0.0015
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(params: ModelParams, lr: float = 0.0015) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(v) for k, v in params.tensors.items()},
        v={k: np.zeros_like(v) for k, v in params.tensors.items()},
        lr=lr,
    )


def adam_step(params: ModelParams, grads: dict[str, np.ndarray], state: AdamState) -> None:
    """One in-place update over every parameter tensor; increments state.t."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** state.t
    bias2 = 1.0 - b2 ** state.t
    for name, theta in params.tensors.items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {name!r} at step {state.t}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        theta -= (state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.epsilon)).astype(theta.dtype)
        if name.endswith(".embed"):
            theta[0, :] = 0.0
