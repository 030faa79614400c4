"""Central finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .rng import Rng
from .tensor import Tensor

__all__ = ["gradient_check"]


def gradient_check(
    f: Callable[[], Tensor],
    params: list[Tensor],
    rng: Rng,
    n_coords: int = 20,
    h: float = 1e-5,
) -> float:
    """Max relative error between analytic and numeric gradients.

    ``f`` rebuilds and returns the scalar loss from the current values of
    ``params`` on every call (it must be deterministic). At least
    ``n_coords`` coordinates are sampled across all parameters; each is
    perturbed by ±h for a central difference. The reported error is
    max |g_a - g_n| / (|g_a| + |g_n| + 1e-8).
    """
    for p in params:
        p.zero_grad()
    loss = f()
    loss.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    sizes = np.array([p.data.size for p in params])
    total = int(sizes.sum())
    n = min(max(n_coords, 20), total)
    flat_choices = np.sort(rng.shuffle_indices(total)[:n])

    bounds = np.cumsum(sizes)
    worst = 0.0
    for flat in flat_choices:
        k = int(np.searchsorted(bounds, flat, side="right"))
        offset = int(flat - (bounds[k - 1] if k else 0))
        view = params[k].data.reshape(-1)
        saved = view[offset]
        view[offset] = saved + h
        up = f().item()
        view[offset] = saved - h
        down = f().item()
        view[offset] = saved
        g_n = (up - down) / (2.0 * h)
        g_a = analytic[k].reshape(-1)[offset]
        err = abs(g_a - g_n) / (abs(g_a) + abs(g_n) + 1e-8)
        worst = max(worst, err)
    return worst
