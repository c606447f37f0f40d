"""Graph-structural measurements: distances, hubs, degree tails, cut-points.

Includes the dyadic hub-path construction that witnesses polylogarithmic
chunk diameters, Hill tail-index estimation for degrees and weights, the
O(E + N) cut-point sweep on segment graphs, and a Monte Carlo check of the
distance-decay envelope of link probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import SfpGraph, link_probability
from .params import ParameterError, PhaseParams
from .rng import RngStream

__all__ = [
    "diameter", "chunk_diameters", "dyadic_hub_path", "HubPathResult",
    "degree_summary", "DegreeSummary", "hill_estimator", "cut_points",
    "CutPointReport", "link_tail_check", "LinkTailReport",
]


def diameter(graph: SfpGraph) -> int:
    """Exact diameter by per-source BFS; raises if disconnected."""
    worst = 0
    for v in range(graph.n):
        dist = graph.bfs_distances(v)
        if (dist < 0).any():
            raise ValueError("graph is disconnected; diameter undefined")
        worst = max(worst, int(dist.max()))
    return worst


def _component_diameter(graph: SfpGraph) -> tuple[int, bool]:
    """(max diameter over components, disconnected flag)."""
    seen = np.zeros(graph.n, dtype=bool)
    worst = 0
    disconnected = False
    for v in range(graph.n):
        if seen[v]:
            continue
        dist = graph.bfs_distances(v)
        comp = dist >= 0
        seen |= comp
        if not comp.all():
            disconnected = True
        # one extra sweep from the farthest point tightens the estimate;
        # for exactness run BFS from every vertex of the component
        for u in np.flatnonzero(comp):
            du = graph.bfs_distances(int(u))
            worst = max(worst, int(du[du >= 0].max()))
    return worst, disconnected


def chunk_diameters(graph: SfpGraph, chunking) -> tuple[np.ndarray, list]:
    """Per-chunk induced-subgraph diameters.

    A disconnected chunk (possible only without forced nearest-neighbour
    edges) reports the max per-component diameter plus a True flag.
    """
    diams = np.zeros(chunking.k, dtype=np.int64)
    flags = []
    for j in range(chunking.k):
        sub = graph.induced_subgraph(chunking.members(j))
        d, disc = _component_diameter(sub)
        diams[j] = d
        flags.append(disc)
    return diams, flags


# ---------------------------------------------------------------------------
# Dyadic hub path


@dataclass
class HubPathResult:
    ok: bool
    path: tuple | None = None
    missing_edge: tuple | None = None
    hubs_left: list = field(default_factory=list)
    hubs_right: list = field(default_factory=list)

    def __len__(self):
        return len(self.path) - 1 if self.path else 0


def dyadic_hub_path(chunk_graph: SfpGraph, m_exp: float = 4.0) -> HubPathResult:
    """Walk endpoint-to-endpoint via per-block maximum-weight vertices.

    Blocks halve dyadically from both ends down to width ~ (log L)^m_exp;
    within each block the max-weight vertex is the hub.  When every
    consecutive hub pair is adjacent, the returned path (nearest-neighbour
    run to the innermost hub, hub hops to the middle, mirrored on the right)
    upper-bounds the distance between the endpoints.  Otherwise the first
    missing hub edge is reported.
    """
    big_l = chunk_graph.n
    block = math.log(big_l) ** m_exp
    if big_l < 2 * block:
        raise ParameterError(
            f"chunk of {big_l} vertices too small for block width "
            f"(log L)^{m_exp} = {block:.1f}; need i_max >= 1")
    i_max = int(math.floor(math.log2(big_l / block)))
    w = chunk_graph.weights

    def argmax_in(lo, hi):
        lo, hi = int(lo), int(hi)
        return lo + int(np.argmax(w[lo:hi]))

    mid = argmax_in(big_l // 4, (3 * big_l) // 4)  # shared innermost block
    left = [mid]
    right = [mid]
    for i in range(2, i_max + 1):
        left.append(argmax_in(big_l * 2 ** -(i + 1), big_l * 2 ** -i))
        right.append(argmax_in(big_l - big_l * 2 ** -i,
                               big_l - big_l * 2 ** -(i + 1)))
    for seq in (left, right):
        for a, b in zip(seq[:-1], seq[1:]):
            if not chunk_graph.has_edge(a, b):
                return HubPathResult(False, missing_edge=(min(a, b), max(a, b)),
                                     hubs_left=left, hubs_right=right)
    # nearest-neighbour runs from the segment ends to the outermost hubs
    path = list(range(0, left[-1])) + list(reversed(left))
    path += right[1:] + list(range(right[-1] + 1, big_l))
    return HubPathResult(True, path=tuple(path), hubs_left=left,
                         hubs_right=right)


# ---------------------------------------------------------------------------
# Degree statistics


def hill_estimator(sample: np.ndarray, top_fraction: float = 0.01,
                   min_count: int = 50) -> float | None:
    """Tail-index estimate from the top order statistics.

    Standard Hill: the reciprocal mean of log(X_(i) / X_(k+1)) over the k
    largest points.  None when fewer than ``min_count`` points make the cut.
    """
    x = np.sort(np.asarray(sample, dtype=float))[::-1]
    x = x[x > 0]
    k = int(math.floor(top_fraction * x.size))
    if k < min_count or k >= x.size:
        return None
    ref = x[k]
    if ref <= 0 or x[0] == ref:
        return None
    logs = np.log(x[:k] / ref)
    return float(1.0 / logs.mean())


@dataclass
class DegreeSummary:
    degrees: np.ndarray
    total: int
    max: int
    hill: float | None
    hill_top_fraction: float
    mean_degree_by_weight: list     # (w_lo, w_hi, count, mean degree)


def degree_summary(graph: SfpGraph, hill_top_fraction: float = 0.01,
                   weight_bins: int = 12) -> DegreeSummary:
    deg = graph.degrees
    hill = hill_estimator(deg.astype(float), hill_top_fraction)
    w = graph.weights
    curve = []
    finite = w[np.isfinite(w)]
    if finite.size and finite.max() > finite.min():
        edges = np.geomspace(finite.min(), finite.max() * (1 + 1e-9),
                             weight_bins + 1)
        which = np.searchsorted(edges, w, side="right") - 1
        for b in range(weight_bins):
            sel = which == b
            if sel.any():
                curve.append((float(edges[b]), float(edges[b + 1]),
                              int(sel.sum()), float(deg[sel].mean())))
    return DegreeSummary(deg, int(deg.sum()), int(deg.max()), hill,
                         hill_top_fraction, curve)


# ---------------------------------------------------------------------------
# Cut-points


@dataclass
class CutPointReport:
    cut_points: np.ndarray
    good_cut_points: np.ndarray
    n: int

    @property
    def density(self) -> float:
        return self.cut_points.size / self.n

    @property
    def good_density(self) -> float:
        return self.good_cut_points.size / self.n


def cut_points(graph: SfpGraph) -> CutPointReport:
    """Vertices x with no edge (a, b), a < x < b, by a max-reach sweep.

    Good cut-points additionally have both neighbours cut.  Segment
    topology only.
    """
    if graph.topology.is_torus:
        raise ParameterError("cut-points are defined on the segment topology")
    n = graph.n
    # reach[a] = farthest right endpoint of an edge starting at or before a
    rmax = np.arange(n, dtype=np.int64)
    for a in range(n):
        nb = graph.neighbors(a)
        if nb.size:
            rmax[a] = max(rmax[a], int(nb.max()))
    running = np.maximum.accumulate(rmax)
    is_cut = np.zeros(n, dtype=bool)
    inner = np.arange(1, n - 1)
    is_cut[inner] = running[inner - 1] <= inner
    good = is_cut.copy()
    good[inner] &= is_cut[inner - 1] & is_cut[inner + 1]
    good[0] = good[n - 1] = False
    return CutPointReport(np.flatnonzero(is_cut), np.flatnonzero(good), n)


# ---------------------------------------------------------------------------
# Link-probability tail envelope


@dataclass
class LinkTailReport:
    distances: np.ndarray
    estimates: np.ndarray
    shapes: np.ndarray
    fitted_c: float
    branch: str                  # "alpha" (tau > 2) or "gamma-log2" (tau <= 2)
    violations: list             # vs. the supplied c, when given


def link_tail_check(params: PhaseParams, dist_grid, reps: int = 100_000,
                    seed: int = 0, c: float | None = None) -> LinkTailReport:
    """Monte Carlo P(x ~ y) at each distance against the decay envelope
    c * d^-alpha (tau > 2) or c * d^-gamma (log d)^2 (tau <= 2).

    The edge probability is averaged exactly over sampled weight pairs
    (Rao-Blackwellized, no edge coin needed).  ``fitted_c`` is the smallest
    envelope constant covering the whole grid; ``violations`` lists grid
    points exceeding a user-supplied constant.
    """
    dist_grid = np.asarray(sorted(dist_grid), dtype=np.int64)
    if (dist_grid < 2).any():
        raise ParameterError("distance grid must start at 2 or above")
    stream = RngStream(seed, "link-tail")
    ti = params.tau - 1.0
    est = np.empty(dist_grid.size)
    for i, d in enumerate(dist_grid):
        g = stream.child(int(d)).generator()
        w1 = (1.0 - g.random(reps)) ** (-1.0 / ti)
        w2 = (1.0 - g.random(reps)) ** (-1.0 / ti)
        est[i] = float(np.mean(link_probability(w1, w2, float(d),
                                                params.alpha)))
    if params.tau > 2:
        shapes = dist_grid.astype(float) ** -params.alpha
        branch = "alpha"
    else:
        shapes = dist_grid.astype(float) ** -params.gamma \
            * np.log(dist_grid.astype(float)) ** 2
        branch = "gamma-log2"
    fitted_c = float((est / shapes).max())
    violations = []
    if c is not None:
        violations = [int(d) for d, e, s in zip(dist_grid, est, shapes)
                      if e > c * s]
    return LinkTailReport(dist_grid, est, shapes, fitted_c, branch, violations)
