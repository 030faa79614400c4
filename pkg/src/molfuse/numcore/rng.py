"""Seeded, splittable random source (PCG64) with explicit Fisher-Yates shuffling.

All stochastic choices in the pipeline (weight init, batch order,
dropout masks, bootstrap draws, noise injection) flow through this
class so a run is a pure function of its seed.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Rng"]


class Rng:
    ALGORITHM = "pcg64"

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed))
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    def split(self, n: int) -> list["Rng"]:
        """n independent child streams; deterministic in the parent seed."""
        return [Rng(child) for child in self._seq.spawn(n)]

    def uniform(self, low: float, high: float, shape=None) -> np.ndarray | float:
        return self._gen.uniform(low, high, size=shape)

    def normal(self, mean: float = 0.0, std: float = 1.0, shape=None):
        return self._gen.normal(mean, std, size=shape)

    def integers(self, low: int, high: int, shape=None):
        """Uniform integers in [low, high), matching numpy's half-open convention."""
        return self._gen.integers(low, high, size=shape)

    def shuffle_indices(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        idx = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = int(self._gen.integers(0, i + 1))
            idx[i], idx[j] = idx[j], idx[i]
        return idx

    def init_uniform(self, shape, fan_in: int) -> np.ndarray:
        """Scaled-uniform weight init: U(-sqrt(1/fan_in), +sqrt(1/fan_in))."""
        bound = (1.0 / fan_in) ** 0.5
        return self._gen.uniform(-bound, bound, size=shape)
