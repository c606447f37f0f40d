"""Chunk coarse-graining: collapse to T_K, rescaled weights, dominated twin.

The torus splits into K arcs ("chunks") of length L ~ N^(gamma-1+eps); the
collapsed graph on T_K links chunks whose max-weight representatives are
adjacent (plus the forced K-cycle).  Rescaling each chunk's max weight by
L^(-1/(tau-1)) through a comonotone quantile map yields weights for a new
weighted graph on T_K with parameters (alpha~, tau) whose gamma~ < 1, and
a shared-uniform coupling makes its edge set a subset of the collapsed
graph's wherever a certified probability inequality holds; everywhere else
the pair is sampled independently and reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import SfpGraph, link_probability, pair_uniform
from .params import ParameterError, PhaseParams, Topology, eps_upper_bound
from .rng import RngStream
from .walk import stationary

__all__ = [
    "Chunking", "CollapsedGraph", "CoupledTriple", "CouplingReport",
    "make_chunking", "tilde_params", "collapse", "couple_tilde",
    "diagnostics", "induced_chunk_graph", "arc_max_distance",
]


@dataclass(frozen=True)
class Chunking:
    """Partition of the torus into K arcs: the first K-1 of length L, the
    last absorbing the remainder (length L + N mod L < 2L)."""

    n: int
    length: int

    def __post_init__(self):
        if self.length < 1 or self.length >= self.n:
            raise ParameterError(f"chunk length {self.length} out of range")
        if self.k < 3:
            raise ParameterError(
                f"need at least 3 chunks, got K={self.k} (L={self.length})")

    @property
    def remainder(self) -> int:
        return self.n % self.length

    @property
    def k(self) -> int:
        return self.n // self.length

    @property
    def sizes(self) -> np.ndarray:
        s = np.full(self.k, self.length, dtype=np.int64)
        s[-1] += self.remainder
        return s

    def bounds(self, i: int) -> tuple[int, int]:
        """Half-open vertex range [start, stop) of chunk i."""
        start = i * self.length
        stop = self.n if i == self.k - 1 else (i + 1) * self.length
        return start, stop

    def members(self, i: int) -> np.ndarray:
        start, stop = self.bounds(i)
        return np.arange(start, stop, dtype=np.int64)

    @property
    def chunk_of(self) -> np.ndarray:
        c = np.minimum(np.arange(self.n) // self.length, self.k - 1)
        return c.astype(np.int64)

    def neighbours(self, i: int, j: int) -> bool:
        k = self.k
        return (j - i) % k == 1 or (i - j) % k == 1

    def shared_boundary(self, i: int, j: int) -> tuple[int, int]:
        """The forced-edge endpoints (in S_i, in S_j) joining adjacent arcs."""
        k = self.k
        if (j - i) % k == 1:      # traversal i -> j in the +1 direction
            return self.bounds(i)[1] - 1, self.bounds(j)[0]
        if (i - j) % k == 1:
            return self.bounds(i)[0], self.bounds(j)[1] - 1
        raise ValueError(f"chunks {i} and {j} are not adjacent")

    def representatives(self, weights: np.ndarray) -> np.ndarray:
        """Max-weight vertex per chunk; ties go to the smallest index."""
        reps = np.empty(self.k, dtype=np.int64)
        for i in range(self.k):
            start, stop = self.bounds(i)
            reps[i] = start + int(np.argmax(weights[start:stop]))
        return reps


def make_chunking(n: int, params: PhaseParams, eps: float | None = None
                  ) -> Chunking:
    """L = floor(N^(gamma-1+eps)) chunking for the 1 < gamma < 2, tau < 2
    regime; eps must satisfy 0 < eps < (gamma-1) ^ (2-gamma)/2."""
    eps = params.eps if eps is None else eps
    if eps is None:
        raise ParameterError("no eps provided (neither argument nor params.eps)")
    g = params.gamma
    if not (1.0 < g < 2.0 and 1.0 < params.tau < 2.0):
        raise ParameterError(
            f"chunking regime needs 1<gamma<2 and 1<tau<2, got "
            f"gamma={g}, tau={params.tau}")
    if not (0.0 < eps < eps_upper_bound(g)):
        raise ParameterError(
            f"eps={eps} outside (0, {eps_upper_bound(g)}) for gamma={g}")
    length = int(math.floor(float(n) ** (g - 1.0 + eps)))
    return Chunking(n, length)


def tilde_params(params: PhaseParams, eps: float) -> PhaseParams:
    """Parameters of the dominated twin:
    tau~ = tau, alpha~ = (2-gamma-1.5 eps) / ((tau-1)(2-gamma-eps))."""
    g = params.gamma
    if not (1.0 < g < 2.0 and 1.0 < params.tau < 2.0):
        raise ParameterError("tilde parameters need 1<gamma<2 and 1<tau<2")
    if not (0.0 < eps < eps_upper_bound(g)):
        raise ParameterError(f"eps={eps} violates the chunking constraint")
    alpha_t = (2.0 - g - 1.5 * eps) / ((params.tau - 1.0) * (2.0 - g - eps))
    out = PhaseParams(alpha_t, params.tau)
    if not out.gamma < 1.0:
        raise AssertionError(
            f"gamma~={out.gamma} >= 1; eps={eps} misused for gamma={g}")
    return out


@dataclass
class CollapsedGraph:
    """K-vertex graph linking chunks with adjacent representatives, plus
    the forced K-cycle."""

    graph: SfpGraph          # adjacency on T_K; weights = chunk max weights
    rep: np.ndarray          # chunk -> representative vertex in the source

    @property
    def k(self) -> int:
        return self.graph.n


def collapse(graph: SfpGraph, chunking: Chunking) -> CollapsedGraph:
    if chunking.n != graph.n:
        raise ParameterError("chunking size mismatch")
    reps = chunking.representatives(graph.weights)
    k = chunking.k
    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            if chunking.neighbours(i, j) or graph.has_edge(int(reps[i]),
                                                           int(reps[j])):
                pairs.append((i, j))
    gk = SfpGraph.from_edges(k, pairs, topology=Topology.torus(k),
                             weights=graph.weights[reps],
                             params=graph.params, seed=graph.seed,
                             variant="standard")
    return CollapsedGraph(gk, reps)


def arc_max_distance(n: int, bounds_a: tuple[int, int],
                     bounds_b: tuple[int, int]) -> int:
    """Max torus distance between vertices of two arcs (half-open bounds).

    The difference x - y ranges over a contiguous interval; the distance
    peaks at values congruent to +-N/2, else at the interval endpoints.
    """
    a0, a1 = bounds_a[0], bounds_a[1] - 1
    b0, b1 = bounds_b[0], bounds_b[1] - 1
    ulo, uhi = a0 - b1, a1 - b0
    if uhi - ulo >= n - 1:
        return n // 2
    for r in (n // 2, n - n // 2):  # peak residues of the distance in x - y
        t = r + n * math.floor((uhi - r) / n)
        if t >= ulo:                # t <= uhi holds by construction
            return n // 2
    return max(_tordist(ulo, n), _tordist(uhi, n))


def _tordist(u: int, n: int) -> int:
    u %= n
    return min(u, n - u)


@dataclass
class CouplingReport:
    weight_clamps: list          # (chunk, raw value, low, high)
    condition_failures: list     # K-pairs where the certified bound failed
    domination_violations: list  # twin edges absent from the collapsed graph
    n_pairs: int

    @property
    def condition_failure_fraction(self) -> float:
        return len(self.condition_failures) / max(self.n_pairs, 1)


@dataclass
class CoupledTriple:
    graph: SfpGraph
    chunking: Chunking
    gamma: CollapsedGraph
    gamma_tilde: SfpGraph
    eps: float
    report: CouplingReport

    def dominated_twin(self) -> SfpGraph:
        """The twin with its (reported) domination-violating edges removed,
        so that every edge traces to a collapsed-graph edge.  Identical to
        ``gamma_tilde`` whenever the coupling produced no violations; the
        flow-transfer construction requires this subgraph."""
        if not self.report.domination_violations:
            return self.gamma_tilde
        bad = set(map(tuple, self.report.domination_violations))
        edges = [tuple(e) for e in self.gamma_tilde.edge_array()
                 if tuple(e) not in bad]
        return SfpGraph.from_edges(self.gamma_tilde.n, edges,
                                   topology=self.gamma_tilde.topology,
                                   weights=self.gamma_tilde.weights,
                                   params=self.gamma_tilde.params,
                                   seed=self.gamma_tilde.seed,
                                   variant="standard")


def couple_tilde(graph: SfpGraph, chunking: Chunking, eps: float,
                 seed: int | None = None) -> CoupledTriple:
    """Build the dominated twin on T_K, coupled to the collapsed graph.

    Weights: the chunk max W is pushed through the comonotone quantile map
    (max-of-L-Pareto CDF into the Pareto quantile), then clamped into the
    rescaling bracket [max(L^(-1/(t-1)) W, 1), (log L)^(2/(t-1)) L^(-1/(t-1)) W];
    clamp events are reported, never hidden.

    Edges: for each non-neighbour K-pair, a certified lower bound p_hat on
    the collapsed edge probability (max weights at the arcs' max distance)
    is compared with the twin probability p~.  Where p_hat >= p~ the twin
    edge reuses the representative pair's own uniform, so twin-edge implies
    collapsed-edge with certainty; where the inequality fails the pair is
    sampled from an independent stream and reported.
    """
    params = graph.params
    tp = tilde_params(params, eps)
    seed = graph.seed if seed is None else seed
    gam = collapse(graph, chunking)
    reps, k = gam.rep, chunking.k
    wmax = graph.weights[reps]
    ti = params.tau - 1.0

    # comonotone quantile coupling, numerically stable for extreme weights;
    # the remainder chunk uses its actual size throughout, so the rescaling
    # bracket holds per chunk and its lower end can never clamp
    sizes = chunking.sizes.astype(float)
    q = wmax ** (-ti)
    log_u = sizes * np.log1p(-np.minimum(q, 1.0 - 1e-18))
    one_minus_u = -np.expm1(log_u)
    raw = one_minus_u ** (-1.0 / ti)
    lo = np.maximum(sizes ** (-1.0 / ti) * wmax, 1.0)
    hi = np.log(sizes) ** (2.0 / ti) * sizes ** (-1.0 / ti) * wmax
    w_tilde = np.clip(raw, lo, hi)
    clamps = [(int(j), float(raw[j]), float(lo[j]), float(hi[j]))
              for j in np.flatnonzero((raw < lo) | (raw > hi))]

    topo_k = Topology.torus(k)
    pairs = list(zip(*_forced_cycle(k)))
    cond_failures, violations = [], []
    n_pairs = 0
    for i in range(k):
        for j in range(i + 1, k):
            if chunking.neighbours(i, j):
                continue
            n_pairs += 1
            d_k = topo_k.distance(i, j)
            p_tilde = float(link_probability(w_tilde[i], w_tilde[j], d_k,
                                             tp.alpha))
            d_max = arc_max_distance(graph.n, chunking.bounds(i),
                                     chunking.bounds(j))
            p_hat = float(link_probability(wmax[i], wmax[j], d_max,
                                           params.alpha))
            if p_hat >= p_tilde:
                u = pair_uniform(graph.seed, graph.topology,
                                 int(reps[i]), int(reps[j]))
                edge = u <= p_tilde
                # shared uniform: edge here forces the representative edge
            else:
                cond_failures.append((i, j))
                u = RngStream(seed, "couple-indep", i, j).uniform_at(0)
                edge = u <= p_tilde
            if edge:
                pairs.append((i, j))
                if not gam.graph.has_edge(i, j):
                    violations.append((i, j))
    gt = SfpGraph.from_edges(k, pairs, topology=topo_k, weights=w_tilde,
                             params=tp, seed=seed, variant="standard")
    report = CouplingReport(clamps, cond_failures, violations, n_pairs)
    return CoupledTriple(graph, chunking, gam, gt, eps, report)


def _forced_cycle(k):
    x = np.arange(k, dtype=np.int64)
    return x, (x + 1) % k


@dataclass
class Diagnostics:
    delta_g: int                 # max chunk diameter
    edge_ratio: float            # |E(G)| / |E(twin)|
    r_ratio: float               # max_j pi_G(S_j) / pi_twin(j)
    pi_max: float                # max_j sum_{z != w in S_j} pi(z) pi(w)
    chunk_diameters: np.ndarray


def diagnostics(triple: CoupledTriple) -> Diagnostics:
    g = triple.graph
    ch = triple.chunking
    gt = triple.gamma_tilde
    if (gt.degrees == 0).any():
        raise ValueError("twin graph has an isolated vertex; its stationary "
                         "measure is undefined")
    from .stats import chunk_diameters
    diams, flags = chunk_diameters(g, ch)
    if any(flags):
        raise ValueError("disconnected chunk; diameters undefined")
    pi = stationary(g)
    pi_t = stationary(gt)
    r = 0.0
    pimax = 0.0
    for j in range(ch.k):
        m = ch.members(j)
        s = float(pi[m].sum())
        sq = float((pi[m] ** 2).sum())
        r = max(r, s / pi_t[j])
        pimax = max(pimax, s * s - sq)
    return Diagnostics(int(max(diams)), g.num_edges / gt.num_edges, r,
                       pimax, np.asarray(diams))


def induced_chunk_graph(graph: SfpGraph, chunking: Chunking, j: int) -> SfpGraph:
    """The subgraph induced on chunk j, relabelled as a segment graph."""
    members = chunking.members(j)
    return graph.induced_subgraph(members,
                                  topology=Topology.segment(members.size))
