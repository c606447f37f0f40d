"""Bottleneck ratios, exact Cheeger constant, weight slices, half torus.

The bottleneck ratio of a vertex set S is Phi(S) = D_{S,S^c} / D_S (cross
edges over internal degree mass) and the Cheeger constant minimizes Phi
over sets with pi(S) <= 1/2 (equality included).  Exact minimization
enumerates all 2^N subsets and is capped accordingly; for the threshold
variant at scale, a finite witness family built from weight slices gives a
heuristic certificate instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import SfpGraph
from .params import ParameterError

__all__ = [
    "VertexSet", "SliceFamily", "bottleneck_ratio", "exact_cheeger",
    "build_slices", "slice_family_from_weights", "slice_size_brackets",
    "slice_cheeger_certificate", "half_torus_set", "cheeger_tmix_bounds",
    "EnumerationCapError",
]

EXACT_ENUM_CAP = 20


class EnumerationCapError(RuntimeError):
    """2^N enumeration refused; use the slice certificate at scale."""


class VertexSet:
    """A vertex subset with cached degree mass and boundary edge count."""

    def __init__(self, graph: SfpGraph, members, name: str = ""):
        self.graph = graph
        mask = np.zeros(graph.n, dtype=bool)
        members = np.asarray(members, dtype=np.int64)
        mask[members] = True
        self.mask = mask
        self.indices = np.flatnonzero(mask)
        self.name = name
        self._d_s = None
        self._d_boundary = None

    @property
    def size(self) -> int:
        return int(self.indices.size)

    @property
    def d_s(self) -> int:
        if self._d_s is None:
            self._d_s = int(self.graph.degrees[self.indices].sum())
        return self._d_s

    @property
    def d_boundary(self) -> int:
        """Number of edges from S to its complement."""
        if self._d_boundary is None:
            g = self.graph
            total = 0
            for v in self.indices:
                total += int((~self.mask[g.neighbors(v)]).sum())
            self._d_boundary = total
        return self._d_boundary

    def pi(self) -> float:
        return self.d_s / g_total(self.graph)

    def complement(self) -> "VertexSet":
        return VertexSet(self.graph, np.flatnonzero(~self.mask),
                         name=f"{self.name}^c" if self.name else "")

    def __repr__(self):  # pragma: no cover
        return f"VertexSet({self.name or 'anon'}, size={self.size})"


def g_total(graph: SfpGraph) -> int:
    return int(graph.total_degree)


def bottleneck_ratio(graph: SfpGraph, s: VertexSet | np.ndarray) -> float:
    """Phi(S) = D_{S,S^c} / D_S.  Errors on the empty or full set."""
    vs = s if isinstance(s, VertexSet) else VertexSet(graph, s)
    if vs.size == 0 or vs.size == graph.n:
        raise ValueError("bottleneck ratio needs a nonempty proper subset")
    if vs.d_s == 0:
        raise ValueError("set has no incident edges; ratio undefined")
    return vs.d_boundary / vs.d_s


def exact_cheeger(graph: SfpGraph, enum_cap: int = EXACT_ENUM_CAP
                  ) -> tuple[float, VertexSet]:
    """Minimum of Phi over subsets with pi(S) <= 1/2, by full enumeration.

    Ties break to the smallest subset bitmask (vertex x is bit x).
    """
    n = graph.n
    if n > enum_cap:
        raise EnumerationCapError(
            f"2^{n} subsets exceed the enumeration cap 2^{enum_cap}; "
            f"use slice_cheeger_certificate for large graphs")
    deg = graph.degrees.astype(np.int64)
    d_g = int(deg.sum())
    edges = graph.edge_array()
    best_phi = math.inf
    best_mask_int = None
    chunk = 1 << 16
    for lo in range(1, (1 << n), chunk):
        ids = np.arange(lo, min(lo + chunk, 1 << n), dtype=np.uint32)
        member = ((ids[:, None] >> np.arange(n, dtype=np.uint32)[None, :]) & 1
                  ).astype(np.int64)
        d_s = member @ deg
        ok = (2 * d_s <= d_g) & (d_s > 0)
        if not ok.any():
            continue
        cross = np.zeros(ids.size, dtype=np.int64)
        for u, v in edges:
            cross += member[:, u] != member[:, v]
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(ok, cross / d_s, np.inf)
        i = int(np.argmin(phi))
        # tie-break inside the chunk: argmin returns the first (smallest id)
        if phi[i] < best_phi - 1e-15:
            best_phi = float(phi[i])
            best_mask_int = int(ids[i])
    if best_mask_int is None:
        raise ValueError("no admissible subset (graph has no edges?)")
    members = [x for x in range(n) if (best_mask_int >> x) & 1]
    return best_phi, VertexSet(graph, members, name=f"mask:{best_mask_int}")


def cheeger_tmix_bounds(phi_star: float, pi_min: float) -> tuple[float, float]:
    """The conductance sandwich around t_mix:
    ((1-Phi*)/(2 Phi*)) log 4 <= t_mix <= (2/Phi*^2) log(4/pi_min)."""
    lower = (1.0 - phi_star) / (2.0 * phi_star) * math.log(4.0)
    upper = 2.0 / phi_star ** 2 * math.log(4.0 / pi_min)
    return lower, upper


# ---------------------------------------------------------------------------
# Weight slices


@dataclass
class SliceRecord:
    name: str
    j: int
    lo: float           # weight interval [lo, hi)
    hi: float
    members: np.ndarray
    expected: float     # exact N * P(W in [lo, hi)) under the weight law
    leading: float      # leading-order term N^(1-gamma/2) Q^(+-j)
    concentrated: bool  # expected count reaches the (log N)^2 regime

    @property
    def size(self) -> int:
        return int(self.members.size)


@dataclass
class SliceFamily:
    """Weight slices V_j, their complements V_{j^c} and high-weight subsets.

    j_max = floor(2 + (alpha/2) log N / log log N); the top slice V_{j_max}
    holds weights >= N^alpha (log N)^2 and the last regular intervals are
    closed outward (up to the top-slice threshold, down to 1) so that the
    slices tile the weight range despite the integer j_max.
    """

    n: int
    alpha: float
    tau: float
    j_max: int
    delta: float
    q: float
    v: dict = field(default_factory=dict)         # j -> SliceRecord
    v_c: dict = field(default_factory=dict)
    v_plus: dict = field(default_factory=dict)
    v_c_plus: dict = field(default_factory=dict)

    def all_records(self):
        for group in (self.v, self.v_c, self.v_plus, self.v_c_plus):
            yield from group.values()


def slice_family_from_weights(weights: np.ndarray, alpha: float, tau: float,
                              n: int) -> SliceFamily:
    """Build the slice family from a weight vector (no adjacency needed)."""
    if n <= math.e:
        raise ParameterError("slices need log log N > 0, so N >= 3")
    if not tau > 1 or math.isnan(tau):
        raise ParameterError(f"slices need a known tau > 1, got {tau}")
    w = np.asarray(weights, dtype=float)
    ln = math.log(n)
    lnln = math.log(ln)
    j_max = int(math.floor(2.0 + (alpha / 2.0) * ln / lnln))
    if j_max < 2:
        raise ParameterError(f"degenerate slicing: j_max={j_max}")
    delta = 2.0 ** (-1.0 / (tau - 1.0))
    q = ln ** (tau - 1.0)
    half = float(n) ** (alpha / 2.0)
    top_lo = float(n) ** alpha * ln ** 2
    lead = float(n) ** (1.0 - alpha * (tau - 1.0) / 2.0)
    conc_floor = ln ** 2

    fam = SliceFamily(n=n, alpha=alpha, tau=tau, j_max=j_max, delta=delta, q=q)
    ti = tau - 1.0

    def rec(name, j, lo, hi, leading):
        members = np.flatnonzero((w >= lo) & (w < hi)) if hi != math.inf \
            else np.flatnonzero(w >= lo)
        upper_mass = 0.0 if hi == math.inf else hi ** -ti
        expected = n * (min(lo, 1.0) ** -ti if lo < 1 else lo ** -ti) \
            - n * upper_mass
        return SliceRecord(name, j, lo, hi, members, expected, leading,
                           expected >= conc_floor)

    for j in range(1, j_max):
        lo = half * ln ** j
        hi = top_lo if j == j_max - 1 else half * ln ** (j + 1)
        fam.v[j] = rec(f"V_{j}", j, lo, hi, lead * q ** -j)
        plus_lo = delta * hi
        fam.v_plus[j] = rec(f"V_{j}+", j, plus_lo, hi, lead * q ** -(j + 1))
    fam.v[j_max] = rec(f"V_{j_max}", j_max, top_lo, math.inf,
                       float(n) ** (1.0 - alpha * ti) * ln ** (-2.0 * ti))
    for j in range(1, j_max + 1):
        hi = half * ln ** (3 - j)
        lo = 1.0 if j == j_max else half * ln ** (2 - j)
        fam.v_c[j] = rec(f"V_{j}c", j, lo, hi, lead * q ** (j - 2))
        fam.v_c_plus[j] = rec(f"V_{j}c+", j, delta * hi, hi, lead * q ** (j - 3))
    return fam


def build_slices(graph: SfpGraph) -> SliceFamily:
    if graph.variant not in ("standard", "simplified"):
        raise ParameterError(
            f"slices are defined for weighted variants, not {graph.variant}")
    return slice_family_from_weights(graph.weights, graph.params.alpha,
                                     graph.params.tau, graph.n)


def slice_size_brackets(fam: SliceFamily) -> list[dict]:
    """Per-slice [1/2, 2] x expected-size brackets with outcome flags.

    The bracket is the testable content of the cardinality concentration;
    it is only claimed for slices whose expected size reaches the
    (log N)^2 concentration floor (the 'concentrated' flag).
    """
    out = []
    for r in fam.all_records():
        lo, hi = 0.5 * r.expected, 2.0 * r.expected
        out.append({
            "name": r.name, "j": r.j, "size": r.size, "expected": r.expected,
            "lower": lo, "upper": hi, "concentrated": r.concentrated,
            "within": bool(lo <= r.size <= hi),
        })
    return out


# ---------------------------------------------------------------------------
# Heuristic certificate and half torus


@dataclass
class CertificateEntry:
    name: str
    size: int
    phi: float


@dataclass
class CertificateReport:
    family: list
    family_min: float
    threshold: float
    passes: bool
    skipped: list


def slice_cheeger_certificate(graph: SfpGraph, c0: float = 6.0,
                              n_prefixes: int = 24) -> CertificateReport:
    """Audit Phi over a finite family of slice-derived witness sets.

    This checks the *mechanism* that keeps the threshold graph's
    conductance polylogarithmic: it is a heuristic audit over {slices,
    their high-weight subsets, weight-ordered prefix unions, complements,
    half torus}, not a minimization over all sets.
    """
    if graph.variant != "simplified":
        raise ParameterError("the certificate applies to the threshold variant")
    if not graph.params.gamma < 1:
        raise ParameterError("certificate regime is gamma < 1")
    fam = build_slices(graph)
    d_g = g_total(graph)
    sets = []
    for r in fam.all_records():
        sets.append(VertexSet(graph, r.members, name=r.name))
    order = np.argsort(-graph.weights, kind="stable")
    sizes = np.unique(np.geomspace(1, graph.n - 1, n_prefixes).astype(int))
    for k in sizes:
        sets.append(VertexSet(graph, order[:k], name=f"top{k}"))
    sets.append(half_torus_set(graph))

    entries, skipped = [], []
    for s in sets:
        if s.size == 0 or s.size == graph.n:
            skipped.append((s.name, "empty-or-full"))
            continue
        if s.d_s == 0:
            skipped.append((s.name, "no-incident-edges"))
            continue
        if 2 * s.d_s > d_g:
            s = s.complement()
            if s.d_s == 0:
                skipped.append((s.name, "no-incident-edges"))
                continue
        entries.append(CertificateEntry(s.name, s.size,
                                        bottleneck_ratio(graph, s)))
    if not entries:
        raise ValueError("no admissible witness sets (graph too sparse?)")
    fam_min = min(e.phi for e in entries)
    threshold = math.log(graph.n) ** (-c0)
    return CertificateReport(entries, fam_min, threshold,
                             fam_min >= threshold, skipped)


def half_torus_set(graph: SfpGraph) -> VertexSet:
    """The arc {1, ..., floor(N/2)} used as the slow-mixing test set."""
    if not graph.topology.is_torus:
        raise ParameterError("half-torus set needs the torus topology")
    return VertexSet(graph, np.arange(1, graph.n // 2 + 1), name="half-torus")
