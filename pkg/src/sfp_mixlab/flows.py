"""Multicommodity flows, edge loads, congestion and the chunk-transfer flow.

A flow routes mass pi(x) pi(y) between every ordered pair of distinct
vertices; the load of an oriented edge is sum_{paths through it} mass *
length, and the congestion max_e f(e) / (pi(a) P(a,b)) upper-bounds the
mixing time through rho(f) log(4 |oriented edges|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import SfpGraph
from .walk import stationary

__all__ = [
    "Flow", "FlowPath", "edge_load", "congestion", "geodesic_flow",
    "chunk_transfer_flow", "comb_tmix_bound", "CouplingViolationError",
]

FEASIBILITY_TOL = 1e-10


class CouplingViolationError(RuntimeError):
    """A coarse edge has no usable representative edge in the fine graph."""

    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = list(offenders)


@dataclass
class FlowPath:
    vertices: tuple
    mass: float
    base_len: int = 0    # coarse-path length |q| for transferred paths
    splices: int = 0     # neighbour-chunk detours taken in place of rep edges

    def __len__(self):
        return len(self.vertices) - 1


@dataclass
class Flow:
    """Sparse path flow: ordered pair -> list of weighted paths."""

    graph: SfpGraph
    paths: dict = field(default_factory=dict)
    _loads: dict = field(default=None, repr=False)

    def add(self, x: int, y: int, path: FlowPath):
        if path.mass < 0 or path.mass > 1:
            raise ValueError(f"path mass {path.mass} outside [0, 1]")
        self.paths.setdefault((x, y), []).append(path)
        self._loads = None

    def iter_paths(self):
        for pair, plist in self.paths.items():
            for p in plist:
                yield pair, p

    def edge_loads(self) -> dict:
        """Oriented edge -> sum of mass * |path| over paths through it."""
        if self._loads is None:
            loads = {}
            for _, p in self.iter_paths():
                contrib = p.mass * len(p)
                vs = p.vertices
                for a, b in zip(vs[:-1], vs[1:]):
                    loads[(a, b)] = loads.get((a, b), 0.0) + contrib
            self._loads = loads
        return self._loads

    def feasibility_residual(self) -> float:
        """max over ordered pairs of |sum of path masses - pi(x) pi(y)|."""
        pi = stationary(self.graph)
        worst = 0.0
        n = self.graph.n
        seen = 0
        for (x, y), plist in self.paths.items():
            tot = math.fsum(p.mass for p in plist)
            worst = max(worst, abs(tot - pi[x] * pi[y]))
            seen += 1
        if seen != n * (n - 1):
            return math.inf
        return worst

    def check_feasible(self, tol: float = FEASIBILITY_TOL):
        r = self.feasibility_residual()
        if not r <= tol:
            raise ValueError(f"flow infeasible: demand residual {r}")

    def validate_edges(self):
        g = self.graph
        for _, p in self.iter_paths():
            vs = p.vertices
            for a, b in zip(vs[:-1], vs[1:]):
                if not g.has_edge(a, b):
                    raise ValueError(f"path uses non-edge ({a}, {b})")


def edge_load(flow: Flow, e: tuple) -> float:
    """Load of the oriented edge ``e = (a, b)``."""
    a, b = e
    if not flow.graph.has_edge(a, b):
        raise ValueError(f"({a}, {b}) is not an edge of the graph")
    return flow.edge_loads().get((a, b), 0.0)


def congestion(flow: Flow) -> float:
    """max over oriented edges of f(e) / (pi(a) P(a, b)).

    For the lazy walk pi(a) P(a, b) = 1 / D_G on every oriented edge.
    """
    g = flow.graph
    pi = stationary(g)
    deg = g.degrees
    rho = 0.0
    for (a, b), load in flow.edge_loads().items():
        q = pi[a] * 0.5 / deg[a]
        if q <= 0:
            raise ValueError(f"edge ({a}, {b}) has zero stationary flow rate")
        rho = max(rho, load / q)
    return rho


def comb_tmix_bound(flow: Flow) -> float:
    """rho(f) * log(4 |oriented edges|), an upper bound on t_mix."""
    return congestion(flow) * math.log(4.0 * 2 * flow.graph.num_edges)


# ---------------------------------------------------------------------------
# Geodesic flow


def bfs_tree_min_pred(graph: SfpGraph, source: int) -> np.ndarray:
    """BFS predecessors with the smallest-index parent at the previous layer.

    Together with layer order this pins one canonical geodesic per pair.
    """
    dist = graph.bfs_distances(source)
    pred = np.full(graph.n, -1, dtype=np.int64)
    for v in range(graph.n):
        if v == source or dist[v] < 0:
            continue
        nbrs = graph.neighbors(v)
        parents = nbrs[dist[nbrs] == dist[v] - 1]
        pred[v] = parents.min()
    return pred


def _path_from_pred(pred, source, target) -> tuple:
    out = [target]
    v = target
    while v != source:
        v = int(pred[v])
        if v < 0:
            raise ValueError("target unreachable from source")
        out.append(v)
    return tuple(reversed(out))


def geodesic_flow(graph: SfpGraph) -> Flow:
    """All mass on one canonical BFS geodesic per ordered pair."""
    pi = stationary(graph)
    flow = Flow(graph)
    for x in range(graph.n):
        pred = bfs_tree_min_pred(graph, x)
        for y in range(graph.n):
            if y == x:
                continue
            path = _path_from_pred(pred, x, y)
            flow.add(x, y, FlowPath(path, float(pi[x] * pi[y])))
    return flow


# ---------------------------------------------------------------------------
# Chunk-transfer flow


def chunk_transfer_flow(graph: SfpGraph, chunking, tilde_graph: SfpGraph,
                        base_flow: Flow) -> Flow:
    """Route the fine graph's demands through a flow on the collapsed graph.

    Within-chunk pairs ride the chunk-internal geodesic.  Cross-chunk pairs
    follow, for every coarse path q of ``base_flow``, the fine path
    x -> x_max(i) -> (representative edges along q) -> x_max(j) -> y with
    mass f*(q) pi(x) pi(y) / (pi~(i) pi~(j)).

    A coarse edge between NEIGHBOURING chunks whose representative edge is
    missing in the fine graph is replaced by the detour through the shared
    arc boundary (always available via forced nearest-neighbour edges); the
    detour count is recorded on the path.  A missing representative edge
    between non-neighbouring chunks is a coupling violation and raises.
    """
    base_flow.check_feasible()
    pi = stationary(graph)
    pi_t = stationary(tilde_graph)
    k = tilde_graph.n
    reps = chunking.representatives(graph.weights)
    chunk_vertices = [chunking.members(i) for i in range(k)]

    # representative-edge map for the coarse edges the base flow can use
    offenders = []
    connectors = {}
    local_trees = {}
    for i in range(k):
        sub = graph.induced_subgraph(chunk_vertices[i])
        local_trees[i] = (sub, {})

    def local_path(i, a, b):
        """Geodesic from a to b inside chunk i (global vertex labels)."""
        sub, trees = local_trees[i]
        verts = chunk_vertices[i]
        la = int(np.searchsorted(verts, a))
        lb = int(np.searchsorted(verts, b))
        if la not in trees:
            trees[la] = bfs_tree_min_pred(sub, la)
        lp = _path_from_pred(trees[la], la, lb)
        return tuple(int(verts[v]) for v in lp)

    for i, j in tilde_graph.edge_array():
        i, j = int(i), int(j)
        a, b = int(reps[i]), int(reps[j])
        if graph.has_edge(a, b):
            connectors[(i, j)] = ((a, b), 0)
        elif chunking.neighbours(i, j):
            connectors[(i, j)] = (_boundary_detour(graph, chunking,
                                                   chunk_vertices, local_path,
                                                   i, j, a, b), 1)
        else:
            offenders.append(((i, j), (a, b)))
    if offenders:
        raise CouplingViolationError(
            f"{len(offenders)} coarse edges lack a representative edge "
            f"between non-neighbouring chunks: {offenders[:10]}", offenders)

    def connector(i, j):
        seq, spl = connectors[(i, j)] if (i, j) in connectors else \
            connectors.get((j, i), (None, None))
        if seq is None:
            raise CouplingViolationError(f"coarse edge ({i},{j}) unknown")
        if (i, j) in connectors:
            return seq, spl
        return tuple(reversed(seq)), spl

    flow = Flow(graph)
    chunk_of = chunking.chunk_of
    for (ci, cj), plist in base_flow.paths.items():
        for q in plist:
            qv = q.vertices
            scale = q.mass / (pi_t[ci] * pi_t[cj])
            for x in chunk_vertices[ci]:
                head = local_path(ci, int(x), int(reps[ci]))
                for y in chunk_vertices[cj]:
                    mass = scale * pi[x] * pi[y]
                    verts = list(head)
                    splices = 0
                    for a, b in zip(qv[:-1], qv[1:]):
                        seq, spl = connector(int(a), int(b))
                        splices += spl
                        verts.extend(seq[1:] if verts[-1] == seq[0] else seq)
                    tail = local_path(cj, int(reps[cj]), int(y))
                    verts.extend(tail[1:])
                    flow.add(int(x), int(y),
                             FlowPath(tuple(verts), float(mass),
                                      base_len=len(q), splices=splices))
    for i in range(k):
        for x in chunk_vertices[i]:
            for y in chunk_vertices[i]:
                if x == y:
                    continue
                path = local_path(i, int(x), int(y))
                flow.add(int(x), int(y),
                         FlowPath(path, float(pi[x] * pi[y])))
    return flow


def _boundary_detour(graph, chunking, chunk_vertices, local_path, i, j, a, b):
    """Path rep(i) -> arc boundary -> rep(j) through the shared nn edge."""
    left_end, right_start = chunking.shared_boundary(i, j)
    part1 = local_path(i, a, left_end)
    part2 = local_path(j, right_start, b)
    if not graph.has_edge(left_end, right_start):
        raise CouplingViolationError(
            f"forced boundary edge ({left_end},{right_start}) missing")
    return part1 + part2


def max_chunk_diameter(graph: SfpGraph, chunking) -> int:
    """max over chunks of the induced subgraph diameter (delegates to the
    structural stats module; kept here for flow-report convenience)."""
    from .stats import chunk_diameters
    diams, flags = chunk_diameters(graph, chunking)
    if any(flags):
        raise ValueError("a chunk's induced subgraph is disconnected")
    return int(max(diams))
