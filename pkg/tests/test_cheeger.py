import math
from itertools import combinations

import numpy as np
import pytest

from sfp_mixlab import cheeger, walk
from sfp_mixlab.graph import SfpGraph, generate, generate_simplified, simplified_from
from sfp_mixlab.params import ParameterError, PhaseParams, Topology
from sfp_mixlab.rng import RngStream

TRIANGLE = SfpGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def brute_force_cheeger(graph):
    """Independent oracle: itertools enumeration."""
    deg = graph.degrees
    d_g = int(deg.sum())
    edges = graph.edge_array()
    best = math.inf
    for r in range(1, graph.n):
        for sub in combinations(range(graph.n), r):
            s = set(sub)
            d_s = int(deg[list(sub)].sum())
            if 2 * d_s > d_g or d_s == 0:
                continue
            cross = sum(1 for u, v in edges if (u in s) != (v in s))
            best = min(best, cross / d_s)
    return best


class TestBottleneckRatio:
    def test_triangle_singleton(self):
        assert cheeger.bottleneck_ratio(TRIANGLE, [0]) == 1.0

    def test_triangle_pair(self):
        assert cheeger.bottleneck_ratio(TRIANGLE, [0, 1]) == 0.5

    def test_no_boundary_is_zero(self):
        g = SfpGraph.from_edges(4, [(0, 1), (2, 3)])
        assert cheeger.bottleneck_ratio(g, [0, 1]) == 0.0

    def test_empty_and_full_rejected(self):
        with pytest.raises(ValueError):
            cheeger.bottleneck_ratio(TRIANGLE, [])
        with pytest.raises(ValueError):
            cheeger.bottleneck_ratio(TRIANGLE, [0, 1, 2])

    def test_cache_matches_recompute(self):
        g = generate(PhaseParams(1.7, 1.6), Topology.torus(40), seed=3)
        rng = np.random.default_rng(0)
        deg = g.degrees
        edges = g.edge_array()
        for _ in range(200):
            k = int(rng.integers(1, g.n))
            members = rng.choice(g.n, size=k, replace=False)
            vs = cheeger.VertexSet(g, members)
            s = set(members.tolist())
            assert vs.d_s == int(deg[members].sum())
            assert vs.d_boundary == sum(1 for u, v in edges
                                        if (u in s) != (v in s))


class TestExactCheeger:
    def test_four_cycle(self):
        g = SfpGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        phi, arg = cheeger.exact_cheeger(g)
        assert phi == pytest.approx(0.5)
        assert sorted(arg.indices.tolist()) == [0, 1]   # smallest bitmask tie

    def test_triangle_only_singletons_admissible(self):
        phi, arg = cheeger.exact_cheeger(TRIANGLE)
        assert phi == 1.0
        assert arg.indices.tolist() == [0]

    def test_matches_bruteforce(self):
        for seed in range(10):
            g = generate(PhaseParams(1.5 + 0.1 * seed, 1.4 + 0.08 * seed),
                         Topology.torus(6 + seed % 4), seed=seed)
            phi, _ = cheeger.exact_cheeger(g)
            assert phi == pytest.approx(brute_force_cheeger(g), abs=1e-12)

    def test_minimizes_over_samples(self):
        g = generate(PhaseParams(2.0, 1.7), Topology.torus(12), seed=5)
        phi, _ = cheeger.exact_cheeger(g)
        deg = g.degrees
        d_g = int(deg.sum())
        rng = np.random.default_rng(1)
        for _ in range(300):
            members = rng.choice(12, size=int(rng.integers(1, 12)),
                                 replace=False)
            if 2 * int(deg[members].sum()) <= d_g and deg[members].sum() > 0:
                assert phi <= cheeger.bottleneck_ratio(g, members) + 1e-12

    def test_cap(self):
        g = generate(PhaseParams(2.0, 1.5), Topology.torus(40), seed=0)
        with pytest.raises(cheeger.EnumerationCapError):
            cheeger.exact_cheeger(g)

    def test_sandwich_with_exact_tmix(self):
        for seed in range(25):
            n = 6 + seed % 9
            g = generate(PhaseParams(0.8 + 0.25 * (seed % 6),
                                     1.3 + 0.22 * (seed % 7)),
                         Topology.torus(n), seed=seed)
            phi, _ = cheeger.exact_cheeger(g)
            est = walk.exact_tmix(g)
            pi_min = walk.stationary(g).min()
            lo, up = cheeger.cheeger_tmix_bounds(phi, pi_min)
            assert lo <= est.value <= up


class TestSlices:
    N = 50_000
    ALPHA = 1.8
    TAU = 1.5

    def family(self, seed=0):
        w = RngStream(seed, "weights").pareto(self.N, self.TAU - 1.0)
        return cheeger.slice_family_from_weights(w, self.ALPHA, self.TAU,
                                                 self.N), w

    def test_jmax_and_delta(self):
        fam, _ = self.family()
        ln = math.log(self.N)
        assert fam.j_max == int(2 + self.ALPHA / 2 * ln / math.log(ln))
        assert fam.delta == pytest.approx(2 ** (-1 / (self.TAU - 1)))

    def test_membership_examples(self):
        fam, w = self.family()
        half = self.N ** (self.ALPHA / 2)
        ln = math.log(self.N)
        # a vertex with W = N^(a/2) (ln N)^1.5 belongs to V_1
        probe = half * ln ** 1.5
        assert fam.v[1].lo <= probe < fam.v[1].hi
        # any vertex above N^alpha (ln N)^2 is in the top slice
        assert fam.v[fam.j_max].lo == pytest.approx(self.N ** self.ALPHA * ln ** 2)

    def test_v1_equals_v1c(self):
        fam, _ = self.family(3)
        assert set(fam.v[1].members) == set(fam.v_c[1].members)

    def test_partition_of_heavy_vertices(self):
        fam, w = self.family(1)
        heavy = np.flatnonzero(w >= self.N ** (self.ALPHA / 2) * math.log(self.N))
        counts = np.zeros(self.N, dtype=int)
        for rec in fam.v.values():
            counts[rec.members] += 1
        assert (counts[heavy] == 1).all()
        assert counts.sum() == heavy.size

    def test_plus_subsets(self):
        fam, _ = self.family(2)
        for j, rec in fam.v_plus.items():
            assert set(rec.members) <= set(fam.v[j].members)
        for j, rec in fam.v_c_plus.items():
            assert set(rec.members) <= set(fam.v_c[j].members)

    def test_low_weight_vertices_covered_by_complement_slices(self):
        fam, w = self.family(4)
        below = np.flatnonzero(w < self.N ** (self.ALPHA / 2)
                               * math.log(self.N) ** 2)
        counts = np.zeros(self.N, dtype=int)
        for rec in fam.v_c.values():
            counts[rec.members] += 1
        assert (counts[below] == 1).all()

    def test_brackets_concentrated_slices(self):
        hits = 0
        for seed in range(20):
            fam, _ = self.family(100 + seed)
            recs = cheeger.slice_size_brackets(fam)
            if all(r["within"] for r in recs if r["concentrated"]):
                hits += 1
        assert hits >= 19

    def test_requires_known_tau(self):
        w = np.ones(100)
        with pytest.raises(ParameterError):
            cheeger.slice_family_from_weights(w, 1.0, float("nan"), 100)

    def test_build_slices_variant_guard(self):
        from sfp_mixlab.graph import generate_long_range
        g = generate_long_range(1.5, Topology.torus(64), seed=0)
        with pytest.raises(ParameterError):
            cheeger.build_slices(g)


class TestCertificate:
    def test_certificate_on_threshold_graph(self):
        n = 20_000
        w = RngStream(7, "weights").pareto(n, 0.5)
        g = generate_simplified(n, 1.8, w, tau=1.5, seed=7)
        rep = cheeger.slice_cheeger_certificate(g)
        assert rep.passes
        assert rep.family_min >= rep.threshold
        assert all(e.phi >= 0 for e in rep.family)

    def test_rejects_standard_variant(self):
        g = generate(PhaseParams(1.8, 1.5), Topology.torus(64), seed=1)
        with pytest.raises(ParameterError):
            cheeger.slice_cheeger_certificate(g)

    def test_rejects_wrong_phase(self):
        w = RngStream(8, "weights").pareto(1000, 0.5)
        g = generate_simplified(1000, 3.0, w, tau=1.5, seed=8)  # gamma = 1.5
        with pytest.raises(ParameterError):
            cheeger.slice_cheeger_certificate(g)

    def test_empty_slices_skipped_with_warning(self):
        n = 2000
        w = RngStream(9, "weights").pareto(n, 0.5)
        g = generate_simplified(n, 1.8, w, tau=1.5, seed=9)
        rep = cheeger.slice_cheeger_certificate(g)
        assert isinstance(rep.skipped, list)   # small N leaves empty slices
        assert len(rep.skipped) > 0


class TestHalfTorus:
    def test_literal_set(self):
        g = generate(PhaseParams(1.5, 3.0), Topology.torus(10), seed=0)
        assert cheeger.half_torus_set(g).indices.tolist() == [1, 2, 3, 4, 5]

    def test_n4_boundary(self):
        g = SfpGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        s = cheeger.half_torus_set(g)
        assert s.indices.tolist() == [1, 2]
        assert s.d_boundary == 2     # the two wrap-around cycle edges

    def test_segment_rejected(self):
        g = generate(PhaseParams(2.0, 2.5), Topology.segment(16), seed=0)
        with pytest.raises(ParameterError):
            cheeger.half_torus_set(g)
