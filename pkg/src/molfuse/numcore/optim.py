"""Adam with bias correction over lists of parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor

__all__ = ["AdamState", "adam_step", "NonFiniteGradientError"]


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[int, np.ndarray] = field(default_factory=dict)
    v: dict[int, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: list[Tensor], grads: list[np.ndarray] | None, state: AdamState
) -> list[Tensor]:
    """One in-place Adam update; reads ``p.grad`` when grads is None."""
    if grads is None:
        grads = [np.zeros_like(p.data) if p.grad is None else p.grad for p in params]
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for k, (p, g) in enumerate(zip(params, grads)):
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.data.shape}")
        if not np.isfinite(g).all():
            raise NonFiniteGradientError(f"non-finite gradient in parameter {k}")
        if k not in state.m:
            state.m[k] = np.zeros_like(p.data)
            state.v[k] = np.zeros_like(p.data)
        state.m[k] += (1.0 - state.beta1) * (g - state.m[k])
        state.v[k] += (1.0 - state.beta2) * (g * g - state.v[k])
        m_hat = state.m[k] / bc1
        v_hat = state.v[k] / bc2
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params
