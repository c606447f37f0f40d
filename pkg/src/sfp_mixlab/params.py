"""Model parameters and the underlying one-dimensional geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["PhaseParams", "Topology", "ParameterError"]


class ParameterError(ValueError):
    """Invalid model parameters."""


def eps_upper_bound(gamma: float) -> float:
    """Largest admissible chunking slack: min(gamma - 1, (2 - gamma) / 2)."""
    return min(gamma - 1.0, (2.0 - gamma) / 2.0)


@dataclass(frozen=True)
class PhaseParams:
    """Exponents of the weighted spatial graph.

    ``alpha`` tunes the distance decay of link probabilities, ``tau - 1`` is
    the tail index of the vertex weights, and the derived ``gamma =
    alpha * (tau - 1)`` drives the phase diagram.  ``eps`` is the optional
    coarse-graining slack, admissible only for 1 < gamma < 2.
    ``tau = inf`` encodes unit weights (the long-range special case) and
    ``tau = nan`` a threshold graph built from externally supplied weights.
    """

    alpha: float
    tau: float
    eps: float | None = None

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not math.isnan(self.tau) and not (self.tau > 1):
            raise ParameterError(f"tau must exceed 1, got {self.tau}")
        if self.eps is not None:
            g = self.gamma
            if not (1.0 < g < 2.0):
                raise ParameterError(
                    f"eps is only meaningful for 1 < gamma < 2, got gamma={g}")
            if not (0.0 < self.eps < eps_upper_bound(g)):
                raise ParameterError(
                    f"eps={self.eps} outside (0, {eps_upper_bound(g)}) "
                    f"for gamma={g}")

    @property
    def gamma(self) -> float:
        return self.alpha * (self.tau - 1.0)

    @property
    def weight_tail_index(self) -> float:
        return self.tau - 1.0


@dataclass(frozen=True)
class Topology:
    """Vertex layout: a torus (cyclic) or a segment (free boundary)."""

    kind: str
    n: int

    TORUS = "torus"
    SEGMENT = "segment"

    def __post_init__(self):
        if self.kind not in (self.TORUS, self.SEGMENT):
            raise ParameterError(f"unknown topology kind {self.kind!r}")
        if self.n < 3:
            raise ParameterError(f"need at least 3 vertices, got {self.n}")

    @classmethod
    def torus(cls, n: int) -> "Topology":
        return cls(cls.TORUS, n)

    @classmethod
    def segment(cls, n: int) -> "Topology":
        return cls(cls.SEGMENT, n)

    @property
    def is_torus(self) -> bool:
        return self.kind == self.TORUS

    def distance(self, x: int, y: int) -> int:
        d = abs(int(x) - int(y))
        if self.is_torus:
            return min(d, self.n - d)
        return d

    def max_distance(self) -> int:
        return self.n // 2 if self.is_torus else self.n - 1

    def pair_count(self, d: int) -> int:
        """Number of unordered vertex pairs at distance exactly ``d``."""
        if d < 1 or d > self.max_distance():
            return 0
        if self.is_torus:
            return self.n // 2 if 2 * d == self.n else self.n
        return self.n - d
