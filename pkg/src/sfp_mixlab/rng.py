"""Deterministic counter-based random streams.

Every random quantity in the package is drawn from a stream addressed by
``(master_seed, purpose, *indices)``.  Streams are independent Philox
generators derived through numpy's ``SeedSequence``, so any random object
(one weight vector, the uniform attached to one vertex pair, one walker
trajectory) can be regenerated in isolation, in any order and on any number
of workers, without changing its value.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["RngStream"]

_MASK64 = (1 << 64) - 1
# Philox4x64 emits 4 words per counter tick; advance() moves whole ticks.
_WORDS_PER_TICK = 4


def _tag(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


class RngStream:
    """A named, replayable random stream.

    Output is a pure function of ``(master_seed, purpose, indices)``;
    distinct keys give independent-quality streams.
    """

    def __init__(self, master_seed: int, purpose: str, *indices: int):
        self.master_seed = int(master_seed) & _MASK64
        self.key = (purpose, *map(int, indices))
        self._entropy = [self.master_seed, _tag(purpose),
                         *(int(i) & _MASK64 for i in indices)]

    def child(self, *indices: int) -> "RngStream":
        """Sub-stream with extra index components appended to the key."""
        return RngStream(self.master_seed, self.key[0], *self.key[1:], *indices)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self._entropy)))

    def uniforms(self, n: int) -> np.ndarray:
        return self.generator().random(int(n))

    def uniform_at(self, index: int) -> float:
        """The ``index``-th value of ``uniforms(m)`` for any ``m > index``.

        Uses counter advancement, so random access costs O(1) draws.
        """
        index = int(index)
        bg = np.random.Philox(np.random.SeedSequence(self._entropy))
        bg.advance(index // _WORDS_PER_TICK)
        rem = index % _WORDS_PER_TICK
        return float(np.random.Generator(bg).random(rem + 1)[rem])

    def uniforms_at(self, indices) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        return np.array([self.uniform_at(i) for i in indices])

    def pareto(self, n: int, tail_index: float) -> np.ndarray:
        """Pareto samples with P(W >= t) = t**(-tail_index), support [1, inf).

        Inverse-CDF transform W = (1 - U) ** (-1 / tail_index) on unit
        uniforms, so U = 0 maps to the support endpoint W = 1.
        """
        if tail_index <= 0:
            raise ValueError(f"tail index must be positive, got {tail_index}")
        return pareto_from_uniform(self.uniforms(n), tail_index)

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.master_seed}, key={self.key})"


def pareto_from_uniform(u: np.ndarray, tail_index: float) -> np.ndarray:
    return (1.0 - np.asarray(u)) ** (-1.0 / tail_index)
