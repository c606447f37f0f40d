"""Heavy-tailed spatial random graphs on the torus and segment.

The standard model attaches Pareto(tau - 1) weights to vertices and links
x, y at distance d with probability 1 - exp(-W_x W_y / d**alpha), with all
nearest-neighbour edges forced.  Two derived variants share the weights:
the long-range case (all weights 1) and the threshold ("simplified") graph
that keeps exactly the pairs with W_x W_y >= N**alpha (log N)**2.

Edge sampling is keyed per (seed, "edges", distance): the uniform of the
pair (x, x+d) is the x-th draw of that distance's stream, so generation is
deterministic under any parallel schedule and single pair uniforms can be
replayed in isolation (used by the threshold-graph coupling).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .params import ParameterError, PhaseParams, Topology
from .rng import RngStream, pareto_from_uniform

__all__ = [
    "SfpGraph", "sample_weights", "link_probability", "generate",
    "generate_long_range", "generate_simplified", "simplified_from",
    "pair_uniform", "simplified_subset_violations", "serialize",
    "deserialize", "GraphFormatError", "ResourceLimitError",
]

VARIANTS = ("standard", "simplified", "longrange")

# Full O(N^2) pair scans are refused above this many vertices.
DEFAULT_SCAN_CAP = 1 << 17


class ResourceLimitError(RuntimeError):
    """Graph too large for the configured generation budget."""


class GraphFormatError(ValueError):
    """Malformed graph file; carries the offending line and field."""

    def __init__(self, message, line_no=None, field_name=None):
        loc = f" (line {line_no}" + (f", field {field_name!r})" if field_name else ")") \
            if line_no is not None else ""
        super().__init__(message + loc)
        self.line_no = line_no
        self.field_name = field_name


def sample_weights(n: int, tau: float, rng: RngStream) -> np.ndarray:
    """I.i.d. weights with P(W >= t) = t**(-(tau-1)) for t >= 1."""
    if n < 1:
        raise ParameterError(f"need n >= 1, got {n}")
    if not tau > 1:
        raise ParameterError(f"tau must exceed 1 for a valid weight tail, got {tau}")
    return rng.pareto(n, tau - 1.0)


def link_probability(wx, wy, dist, alpha):
    """1 - exp(-wx*wy / dist**alpha), clamped into [0, 1].  Vectorized."""
    wx = np.asarray(wx, dtype=float)
    wy = np.asarray(wy, dtype=float)
    dist = np.asarray(dist, dtype=float)
    with np.errstate(over="ignore"):
        prod = wx * wy
    t = _exponent(prod, dist, alpha)
    p = -np.expm1(-t)
    return np.clip(p, 0.0, 1.0) if p.ndim else float(min(max(p, 0.0), 1.0))


def _exponent(prod, dist, alpha):
    """W_x W_y / d**alpha with overflow-safe handling of extreme values."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        dpow = np.power(dist, -float(alpha))
        t = prod * dpow
        # Overflow/underflow (inf, nan, or underflowed d**-alpha): redo the
        # affected entries in log space so extreme weights stay usable.
        bad = ~np.isfinite(t) | ((np.asarray(dpow) == 0) & (prod > 0))
        if np.any(bad):
            t = np.array(t, copy=True, ndmin=1)
            badv = np.broadcast_to(bad, t.shape)
            pv = np.broadcast_to(np.asarray(prod, dtype=float), t.shape)[badv]
            dv = np.broadcast_to(np.asarray(dist, dtype=float), t.shape)[badv]
            logt = np.log(pv) - alpha * np.log(dv)
            t[badv] = np.exp(np.clip(logt, -745.0, 709.0))
            if np.ndim(prod) == 0 and np.ndim(dist) == 0:
                t = t[0]
    return t


@dataclass
class SfpGraph:
    """Immutable weighted spatial graph with CSR adjacency.

    Adjacency is symmetric and self-loop free; ``indices[indptr[v]:indptr[v+1]]``
    lists the sorted neighbours of ``v``.
    """

    topology: Topology
    params: PhaseParams
    weights: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    seed: int
    variant: str
    _degrees: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def degrees(self) -> np.ndarray:
        if self._degrees is None:
            self._degrees = np.diff(self.indptr)
        return self._degrees

    @property
    def num_edges(self) -> int:
        return int(self.indices.size) // 2

    @property
    def total_degree(self) -> int:
        return int(self.indices.size)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return bool(i < row.size and row[i] == v)

    def edge_array(self) -> np.ndarray:
        """All undirected edges as an (m, 2) array with u < v."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        mask = rows < self.indices
        return np.column_stack([rows[mask], self.indices[mask]])

    def bfs_distances(self, source: int) -> np.ndarray:
        """Hop distances from ``source``; -1 marks unreachable vertices."""
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[source] = 0
        frontier = np.array([source])
        d = 0
        while frontier.size:
            nbrs = self.indices[_ranges(self.indptr, frontier)]
            nbrs = nbrs[dist[nbrs] < 0]
            if nbrs.size == 0:
                break
            frontier = np.unique(nbrs)
            d += 1
            dist[frontier] = d
        return dist

    def is_connected(self) -> bool:
        return bool((self.bfs_distances(0) >= 0).all())

    def induced_subgraph(self, vertices: np.ndarray,
                         topology: Topology | None = None) -> "SfpGraph":
        """Subgraph on ``vertices`` relabelled 0..k-1 in the given order."""
        vertices = np.asarray(vertices, dtype=np.int64)
        lookup = np.full(self.n, -1, dtype=np.int64)
        lookup[vertices] = np.arange(vertices.size)
        rows, cols = [], []
        for new_v, old_v in enumerate(vertices):
            nb = lookup[self.neighbors(old_v)]
            nb = nb[nb >= 0]
            rows.append(np.full(nb.size, new_v))
            cols.append(nb)
        indptr, indices = _csr_from_oriented(
            np.concatenate(rows) if rows else np.array([], dtype=np.int64),
            np.concatenate(cols) if cols else np.array([], dtype=np.int64),
            vertices.size)
        topo = topology or Topology.segment(max(vertices.size, 3))
        return SfpGraph(topo, self.params, self.weights[vertices],
                        indptr, indices, self.seed, self.variant)

    @classmethod
    def from_edges(cls, n: int, edges, topology: Topology | None = None,
                   weights=None, params: PhaseParams | None = None,
                   seed: int = 0, variant: str = "standard") -> "SfpGraph":
        """Build a graph from an explicit undirected edge list (for tests
        and hand-constructed examples; invariants are not enforced here)."""
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges[:, 0] == edges[:, 1]).any():
            raise ValueError("self-loops are not allowed")
        topo = topology or Topology.torus(n)
        u = np.concatenate([edges[:, 0], edges[:, 1]])
        v = np.concatenate([edges[:, 1], edges[:, 0]])
        indptr, indices = _csr_from_oriented(u, v, n)
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        p = params or PhaseParams(1.0, 2.0)
        return cls(topo, p, w, indptr, indices, seed, variant)


def _ranges(indptr, vertices):
    """Concatenated index ranges indptr[v]..indptr[v+1] for v in vertices."""
    counts = indptr[vertices + 1] - indptr[vertices]
    vertices = vertices[counts > 0]
    counts = counts[counts > 0]
    total = int(counts.sum())
    out = np.ones(total, dtype=np.int64)
    if total == 0:
        return out[:0]
    starts = np.cumsum(counts)[:-1]
    out[0] = indptr[vertices[0]]
    out[starts] = indptr[vertices[1:]] - (indptr[vertices[:-1]] + counts[:-1] - 1)
    return np.cumsum(out)


def _csr_from_oriented(u, v, n):
    """CSR (indptr, indices) from oriented pair lists; sorts and keeps all."""
    order = np.lexsort((v, u))
    u, v = u[order], v[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, u + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, v.astype(np.int64)


# ---------------------------------------------------------------------------
# Edge sampling


def _edge_stream(seed: int, d: int) -> RngStream:
    return RngStream(seed, "edges", d)


def _weights_stream(seed: int) -> RngStream:
    return RngStream(seed, "weights")


def _scan_distance(weights_ext, log_weights_ext, topo: Topology, d: int,
                   alpha: float, seed: int, safe_mul: bool):
    """Sample the edges at torus/segment distance ``d``.

    Returns pair-start indices x such that {x, partner(x, d)} is an edge.
    Pure function of (seed, d) given the weights.  ``safe_mul`` asserts that
    no weight product can overflow, enabling the fast multiply path; the
    fallback computes exponents in log space.
    """
    m = topo.pair_count(d)
    u = _edge_stream(seed, d).uniforms(m)
    dpow = float(d) ** -alpha
    if safe_mul and dpow > 0.0:
        t = weights_ext[:m] * weights_ext[d:d + m]
        t *= dpow
    else:
        t = log_weights_ext[:m] + log_weights_ext[d:d + m]
        t -= alpha * math.log(d)
        np.clip(t, -745.0, 709.0, out=t)
        np.exp(t, out=t)
    # u < 1 always, so u < t is equivalent to u < min(t, 1)
    cand = np.flatnonzero(u < t)
    if cand.size == 0:
        return cand
    keep = u[cand] <= -np.expm1(-t[cand])
    return cand[keep]


def _forced_nn_pairs(topo: Topology):
    n = topo.n
    if topo.is_torus:
        x = np.arange(n, dtype=np.int64)
        return x, (x + 1) % n
    x = np.arange(n - 1, dtype=np.int64)
    return x, x + 1


def _partner(topo: Topology, x, d):
    return (x + d) % topo.n if topo.is_torus else x + d


def _assemble(topo, params, weights, seed, variant, pair_lists):
    us = [p[0] for p in pair_lists]
    vs = [p[1] for p in pair_lists]
    u = np.concatenate(us) if us else np.array([], dtype=np.int64)
    v = np.concatenate(vs) if vs else np.array([], dtype=np.int64)
    indptr, indices = _csr_from_oriented(
        np.concatenate([u, v]), np.concatenate([v, u]), topo.n)
    return SfpGraph(topo, params, weights, indptr, indices, int(seed), variant)


def generate(params: PhaseParams, topology: Topology, seed: int,
             scan_cap: int = DEFAULT_SCAN_CAP) -> SfpGraph:
    """Sample the standard weighted graph.

    Deterministic given ``seed``: weights come from the (seed, "weights")
    stream and the uniform of each pair from its distance-keyed stream.
    """
    n = topology.n
    if n > scan_cap:
        raise ResourceLimitError(
            f"n={n} exceeds the O(n^2) pair-scan cap {scan_cap}; raise "
            f"scan_cap explicitly if you accept the cost")
    weights = sample_weights(n, params.tau, _weights_stream(seed))
    return _generate_with_weights(params, topology, seed, weights, "standard")


def _generate_with_weights(params, topology, seed, weights, variant,
                           workers=None):
    w_ext = np.concatenate([weights, weights]) if topology.is_torus else weights
    with np.errstate(over="ignore"):
        wmax = float(weights.max())
        safe_mul = math.isfinite(wmax * wmax)
    logw_ext = None if safe_mul else np.log(w_ext)
    dists = range(2, topology.max_distance() + 1)

    def scan(d):
        return _scan_distance(w_ext, logw_ext, topology, d, params.alpha,
                              seed, safe_mul)

    workers = workers or min(2, os.cpu_count() or 1)
    if workers > 1 and topology.n >= 4096:
        # numpy releases the GIL on large kernels; each distance is an
        # independent keyed stream, so the schedule cannot change the result
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scanned = list(pool.map(scan, dists, chunksize=64))
    else:
        scanned = [scan(d) for d in dists]
    pairs = [_forced_nn_pairs(topology)]
    pairs += [(xs, _partner(topology, xs, d))
              for d, xs in zip(dists, scanned) if xs.size]
    return _assemble(topology, params, weights, seed, variant, pairs)


def generate_long_range(alpha: float, topology: Topology, seed: int,
                        scan_cap: int = DEFAULT_SCAN_CAP) -> SfpGraph:
    """All-weights-1 special case: P(edge at distance d) = 1 - exp(-d**-alpha).

    Below the scan cap this follows the exact per-pair scan.  Above it,
    probabilities at a fixed distance are identical, so the edge count is
    Binomial and placement uniform; that path is equivalent in distribution
    (not draw-for-draw identical) and used only for large n.
    """
    n = topology.n
    params = PhaseParams(alpha, math.inf)
    weights = np.ones(n)
    if n <= scan_cap:
        return _generate_with_weights(params, topology, seed, weights, "longrange")
    pairs = [_forced_nn_pairs(topology)]
    for d in range(2, topology.max_distance() + 1):
        m = topology.pair_count(d)
        p = float(link_probability(1.0, 1.0, d, alpha))
        g = _edge_stream(seed, d).generator()
        k = g.binomial(m, p)
        if k:
            xs = g.choice(m, size=k, replace=False).astype(np.int64)
            xs.sort()
            pairs.append((xs, _partner(topology, xs, d)))
    return _assemble(topology, params, weights, seed, "longrange", pairs)


def generate_simplified(n: int, alpha: float, weights: np.ndarray,
                        tau: float = math.nan, seed: int = 0) -> SfpGraph:
    """Threshold graph: x ~ y iff W_x W_y >= n**alpha * (log n)**2.

    Deterministic given the weights; carries no forced nearest-neighbour
    edges, so connectivity is an emergent property.  ``tau`` is carried as
    metadata when the weights' law is known (needed by the weight-slice
    machinery); nan marks it unknown.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.size != n:
        raise ParameterError(f"weights length {weights.size} != n={n}")
    topo = Topology.torus(n)
    thresh = float(n) ** alpha * math.log(n) ** 2
    order = np.argsort(-weights, kind="stable")
    ws = weights[order]
    # partner count per sorted row: ws[j] >= thresh / ws[i], ws descending
    need = thresh / ws
    ub = np.searchsorted(-ws, -need, side="right")
    us, vs = [], []
    for i in np.flatnonzero(ub > np.arange(n) + 1):
        js = order[i + 1:ub[i]]
        us.append(np.full(js.size, order[i]))
        vs.append(js)
    params = PhaseParams(alpha, tau)
    return _assemble(topo, params, weights, seed, "simplified",
                     list(zip(us, vs)) or [(np.array([], dtype=np.int64),) * 2])


def simplified_from(graph: SfpGraph) -> SfpGraph:
    """Threshold graph sharing the weights (and tau, seed) of ``graph``."""
    if not graph.topology.is_torus:
        raise ParameterError("the threshold variant is defined on the torus")
    return generate_simplified(graph.n, graph.params.alpha, graph.weights,
                               tau=graph.params.tau, seed=graph.seed)


def pair_uniform(seed: int, topology: Topology, x: int, y: int) -> float:
    """The uniform U_{xy} that ``generate`` compares against the link
    probability of pair {x, y}.  Replayable without building the graph."""
    if x == y:
        raise ValueError("no self pairs")
    d = topology.distance(x, y)
    if topology.is_torus:
        if 2 * d == topology.n:
            idx = min(x, y)
        else:
            idx = x if (x + d) % topology.n == y else y
    else:
        idx = min(x, y)
    return _edge_stream(seed, d).uniform_at(idx)


def simplified_subset_violations(simplified: SfpGraph) -> np.ndarray:
    """Threshold-graph edges that the standard graph with the same weights
    and seed would NOT carry under the shared pair uniforms; (m, 2) array.

    Such a pair requires U_{xy} > 1 - exp(-W_x W_y / d**alpha) despite
    W_x W_y >= N**alpha (log N)**2, so the expected fraction is at most
    exp(-(2**alpha) (log N)**2)-sized: essentially zero at any usable N.
    Only the shared metadata (weights, seed, alpha) enters; the standard
    graph itself need not be materialized.
    """
    bad = []
    alpha = simplified.params.alpha
    topo = simplified.topology
    w = simplified.weights
    for u, v in simplified.edge_array():
        d = topo.distance(u, v)
        if d == 1:
            continue  # forced in the standard graph
        p = link_probability(w[u], w[v], d, alpha)
        if pair_uniform(simplified.seed, topo, int(u), int(v)) > p:
            bad.append((int(u), int(v)))
    return np.asarray(bad, dtype=np.int64).reshape(-1, 2)


# ---------------------------------------------------------------------------
# Serialization: text, line oriented.
#   SFPv1 <variant> <N> <alpha> <tau> <seed> [segment]
#   W <x> <value>          one line per vertex
#   E <u> <v>              one line per edge, u < v

FORMAT_VERSION = "SFPv1"


def serialize(graph: SfpGraph, path) -> None:
    with open(path, "w") as fh:
        header = (f"{FORMAT_VERSION} {graph.variant} {graph.n} "
                  f"{graph.params.alpha!r} {graph.params.tau!r} {graph.seed}")
        if not graph.topology.is_torus:
            header += " segment"
        fh.write(header + "\n")
        for x, w in enumerate(graph.weights):
            fh.write(f"W {x} {float(w)!r}\n")
        for u, v in graph.edge_array():
            fh.write(f"E {u} {v}\n")


def deserialize(path) -> SfpGraph:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise GraphFormatError("empty graph file", line_no=1)
    head = lines[0].split()
    if not head or head[0] != FORMAT_VERSION:
        raise GraphFormatError(
            f"unsupported format version {head[0] if head else '<missing>'!r}, "
            f"expected {FORMAT_VERSION}", line_no=1, field_name="version")
    if len(head) not in (6, 7):
        raise GraphFormatError("header needs 6 or 7 fields", line_no=1)
    variant = head[1]
    if variant not in VARIANTS:
        raise GraphFormatError(f"unknown variant {variant!r}", line_no=1,
                               field_name="variant")
    try:
        n = int(head[2])
        alpha = float(head[3])
        tau = float(head[4])
        seed = int(head[5])
    except ValueError as exc:
        raise GraphFormatError(f"bad header value: {exc}", line_no=1) from None
    if len(head) == 7:
        if head[6] != "segment":
            raise GraphFormatError(f"unknown header flag {head[6]!r}",
                                   line_no=1, field_name="topology")
        topo = Topology.segment(n)
    else:
        topo = Topology.torus(n)

    weights = np.full(n, np.nan)
    us, vs = [], []
    seen_edges = set()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] == "W":
            if len(parts) != 3:
                raise GraphFormatError("W line needs vertex and value",
                                       line_no=line_no, field_name="W")
            x = _parse_vertex(parts[1], n, line_no, "vertex")
            if not math.isnan(weights[x]):
                raise GraphFormatError(f"duplicate weight for vertex {x}",
                                       line_no=line_no, field_name="vertex")
            try:
                weights[x] = float(parts[2])
            except ValueError:
                raise GraphFormatError(f"bad weight value {parts[2]!r}",
                                       line_no=line_no, field_name="value") from None
        elif parts[0] == "E":
            if len(parts) != 3:
                raise GraphFormatError("E line needs two endpoints",
                                       line_no=line_no, field_name="E")
            u = _parse_vertex(parts[1], n, line_no, "u")
            v = _parse_vertex(parts[2], n, line_no, "v")
            if u >= v:
                raise GraphFormatError(
                    f"edge endpoints must satisfy u < v, got ({u}, {v})",
                    line_no=line_no, field_name="edge")
            if (u, v) in seen_edges:
                raise GraphFormatError(f"duplicate edge ({u}, {v})",
                                       line_no=line_no, field_name="edge")
            seen_edges.add((u, v))
            us.append(u)
            vs.append(v)
        else:
            raise GraphFormatError(f"unknown record type {parts[0]!r}",
                                   line_no=line_no, field_name="record")
    missing = np.flatnonzero(np.isnan(weights))
    if missing.size:
        raise GraphFormatError(f"missing weight for vertex {int(missing[0])}",
                               field_name="W")
    if (weights <= 0).any():
        raise GraphFormatError("weights must be positive", field_name="value")
    u = np.asarray(us, dtype=np.int64)
    v = np.asarray(vs, dtype=np.int64)
    _check_forced_nn(variant, topo, seen_edges)
    indptr, indices = _csr_from_oriented(
        np.concatenate([u, v]), np.concatenate([v, u]), n)
    return SfpGraph(topo, PhaseParams(alpha, tau), weights, indptr, indices,
                    seed, variant)


def _parse_vertex(token, n, line_no, field_name):
    try:
        x = int(token)
    except ValueError:
        raise GraphFormatError(f"bad vertex id {token!r}", line_no=line_no,
                               field_name=field_name) from None
    if not 0 <= x < n:
        raise GraphFormatError(f"vertex {x} out of range [0, {n})",
                               line_no=line_no, field_name=field_name)
    return x


def _check_forced_nn(variant, topo, edge_set):
    if variant == "simplified":
        return
    n = topo.n
    xs, ys = _forced_nn_pairs(topo)
    for x, y in zip(xs, ys):
        pair = (min(x, y), max(x, y))
        if pair not in edge_set:
            raise GraphFormatError(
                f"missing forced nearest-neighbour edge {pair}",
                field_name="edge")
