"""Reproducible random streams.

A stream is identified by a master seed plus a chain of stream indices.
Identical keys reproduce identical variate sequences across processes;
distinct keys give statistically independent streams (PCG64 seeded through
SeedSequence).
"""

from __future__ import annotations

import numpy as np


class RandomStream:
    """Single-owner source of uniform variates.

    One stream per worker: never share an instance across concurrent
    consumers.  Derive per-worker streams with :meth:`spawn`; a child's key
    extends the parent's, so children of distinct parents never collide.
    """

    def __init__(self, seed: int, index: int = 0, _key: tuple | None = None):
        self.seed = int(seed)
        self.index = int(index)
        self.key = _key if _key is not None else (self.seed, self.index)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(list(self.key)))
        )

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def spawn(self, index: int) -> "RandomStream":
        """Fresh independent stream whose key extends this stream's key."""
        return RandomStream(self.seed, self.index, _key=self.key + (int(index),))

    def uniform(self, size=None):
        return self._gen.random(size)

    def __repr__(self):
        return f"RandomStream(key={self.key})"
