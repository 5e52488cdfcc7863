"""Reproducible random streams.

Every stream is Philox4x64-10 (counter-based, Salmon et al. 2011) keyed by
the 128-bit pair ``(seed, stream_id)`` with the counter starting at zero.
Derived variates:

* uniform on [0, 1): ``(u >> 11) * 2**-53`` for each raw 64-bit output ``u``;
* uniform on (0, 1]: ``((u >> 11) + 1) * 2**-53``;
* standard normal: Box-Muller on two consecutive (0, 1] uniforms
  ``(a, b)``, returning ``sqrt(-2 ln a) * cos(2 pi b)`` and then, on the next
  call, ``sqrt(-2 ln a) * sin(2 pi b)``;
* integer in [0, n): ``floor(uniform * n)``.

Nothing depends on library-specific seeding, so another implementation of
Philox4x64-10 reproduces the same streams.
"""

from __future__ import annotations

import math

import numpy as np

RNG_VERSION = "philox4x64-10/box-muller/v1"
_TWO_M53 = 2.0**-53

NOISE_STREAM = 0
ENVIRONMENT_STREAM = 1
CONTEXT_STREAM = 2


class Stream:
    """One keyed Philox stream with the derived variates listed above."""

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed % 2**64, self.stream_id % 2**64], dtype=np.uint64)
        self._bitgen = np.random.Philox(counter=0, key=key)
        self._spare: float | None = None

    def _raw(self) -> int:
        return int(self._bitgen.random_raw())

    def uniform(self) -> float:
        return (self._raw() >> 11) * _TWO_M53

    def _open_uniform(self) -> float:
        return ((self._raw() >> 11) + 1) * _TWO_M53

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        a = self._open_uniform()
        b = self._open_uniform()
        r = math.sqrt(-2.0 * math.log(a))
        self._spare = r * math.sin(2.0 * math.pi * b)
        return r * math.cos(2.0 * math.pi * b)

    def normals(self, n: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(n)])

    def integer(self, n: int) -> int:
        if n < 1:
            raise ValueError("n must be positive")
        return min(int(self.uniform() * n), n - 1)

    def sample_without_replacement(self, n: int, k: int) -> list[int]:
        """First ``k`` entries of a Fisher-Yates shuffle of ``range(n)``."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} of {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.integer(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def weighted_index(self, weights) -> int:
        """Index ``i`` with probability ``weights[i]`` (inverse CDF)."""
        u = self.uniform()
        acc = 0.0
        last = 0
        for i, w in enumerate(weights):
            if w <= 0:
                continue
            last = i
            acc += w
            if u < acc:
                return i
        return last
