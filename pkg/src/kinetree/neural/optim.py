"""Optimizers: Adam with bias correction and Nesterov-momentum SGD.

Both update only parameters flagged trainable and read gradients from the
tensors' ``grad`` slots (zero/None grads leave a parameter untouched for
SGD; Adam treats None as zero).
"""

from __future__ import annotations

import numpy as np

from .tensor import ParameterSet


class AdamState:
    def __init__(self):
        self.step = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}


def adam_step(
    params: ParameterSet,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    state.step += 1
    t = state.step
    for name in params.names():
        if not params.is_trainable(name):
            continue
        p = params[name]
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        state.m[name], state.v[name] = m, v
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)


class NesterovState:
    def __init__(self):
        self.velocity: dict[str, np.ndarray] = {}


def nesterov_sgd_step(
    params: ParameterSet,
    state: NesterovState,
    lr: float,
    momentum: float = 0.9,
) -> None:
    """v <- mu v + g;  p <- p - lr (g + mu v)."""
    for name in params.names():
        if not params.is_trainable(name):
            continue
        p = params[name]
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        v = state.velocity.get(name)
        if v is None:
            v = np.zeros_like(p.data)
        v = momentum * v + g
        state.velocity[name] = v
        p.data = p.data - lr * (g + momentum * v)
