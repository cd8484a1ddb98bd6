"""Deterministic random streams.

Every stochastic choice in the package (weight init, degradation sampling,
batch crops) flows through a SeededRng so a whole run is reproducible from
one 64-bit seed.  Philox is counter-based, so the stream depends only on
the seed and the call sequence, never on platform or allocation order.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # Standard splitmix64 finalizer; used only to derive child seeds.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _key_to_int(key) -> int:
    if isinstance(key, str):
        digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    return int(key) & _MASK64


class SeededRng:
    """Counter-based random stream with derivable child streams."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def child(self, *keys) -> "SeededRng":
        """Derive an independent stream from this seed and a key path.

        Children depend only on (seed, keys), not on how much of the parent
        stream has been consumed, so per-record streams stay stable no
        matter the processing order.
        """
        h = self.seed
        for key in keys:
            h = _splitmix64(h ^ _key_to_int(key))
        return SeededRng(h)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, mean=0.0, std=1.0, size=None):
        return self._gen.normal(mean, std, size)

    def poisson(self, lam):
        return self._gen.poisson(lam)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int):
        return self._gen.permutation(n)

    def __repr__(self):
        return f"SeededRng(seed={self.seed})"
