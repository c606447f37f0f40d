import math

import numpy as np
import pytest

from sfp_mixlab import concentration as conc
from sfp_mixlab.graph import link_probability
from sfp_mixlab.params import PhaseParams


class TestBernsteinBound:
    def test_direct_value(self):
        # exp(-100 / (2 (100 + 10/3)))
        assert conc.bernstein_bound(10, 100, 1.0, 1.0) == \
            pytest.approx(0.616392731327227, rel=1e-12)

    def test_limit_at_zero(self):
        assert conc.bernstein_bound(1e-12, 50, 1.0, 1.0) == pytest.approx(1.0)

    def test_monotone_decreasing_in_u(self):
        vals = [conc.bernstein_bound(u, 100, 2.0, 1.5)
                for u in (1, 5, 20, 80, 320)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            conc.bernstein_bound(0.0, 10, 1.0, 1.0)
        with pytest.raises(ValueError):
            conc.bernstein_bound(1.0, 10, -1.0, 1.0)


class TestFukNagaevBound:
    def test_x_equals_y(self):
        # exponent 1: bound = c n y^-gamma
        assert conc.fuk_nagaev_bound(1000, 1.5, 100, 100, 1.0) == \
            pytest.approx(1.0, rel=1e-12)

    def test_monotone_in_x(self):
        vals = [conc.fuk_nagaev_bound(1000, 1.5, x, 50, 1.0)
                for x in (50, 100, 200, 400)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            conc.fuk_nagaev_bound(10, 1.5, 5.0, 10.0, 1.0)   # y > x
        with pytest.raises(ValueError):
            conc.fuk_nagaev_bound(10, 0.9, 10.0, 5.0, 1.0)
        with pytest.raises(ValueError):
            conc.fuk_nagaev_bound(10, 1.5, 10.0, 5.0, 0.0)


class TestWilson:
    def test_contains_point_estimate(self):
        lo, hi = conc.wilson_interval(37, 1000)
        assert lo < 0.037 < hi

    def test_zero_count(self):
        lo, hi = conc.wilson_interval(0, 1000)
        assert lo == 0.0 and hi > 0


class TestCoinAudit:
    def test_bound_covers_frequencies(self):
        cmp_ = conc.bernstein_coin_audit(n=10_000, trials=100_000, seed=0)
        assert cmp_.ok
        for f, b in zip(cmp_.frequencies, cmp_.bounds):
            assert f <= b


class TestFukNagaevAudit:
    def test_calibrated_constant_validates(self):
        cmp_, c = conc.fuk_nagaev_pareto_audit(n=1000, gamma=1.5,
                                               trials=30_000, seed=5)
        assert cmp_.ok
        assert c > 0

    def test_fixed_constant_two(self):
        cmp_, c = conc.fuk_nagaev_pareto_audit(n=1000, gamma=1.5,
                                               trials=30_000, seed=6, c=2.0)
        assert c == 2.0
        assert cmp_.ok


def degree_sum_family(n=100_000, alpha=1.8, tau=1.5, w1=50.0):
    """Degree of a fixed vertex given its weight (gamma = 0.9): independent
    Bernoulli summands over the other vertices of the torus."""
    ti = tau - 1.0
    d = np.minimum(np.arange(1, n), n - np.arange(1, n)).astype(float)

    def sampler(gen):
        w = (1.0 - gen.random(n - 1)) ** (-1.0 / ti)
        p = link_probability(w1, w, d, alpha)
        p[d == 1] = 1.0
        return (gen.random(n - 1) <= p).astype(float)

    return conc.SummandFamily(f"degree-sum-n{n}", sampler, cap=1.0)


def slice_count_family(n=100_000, alpha=1.8, tau=1.5):
    # occupancy of the weight band [N^(a/2), N^(a/2) log N): populous enough
    # at this n to satisfy the audit's second-moment precondition
    ti = tau - 1.0
    lo = n ** (alpha / 2)
    hi = lo * math.log(n)

    def sampler(gen):
        w = (1.0 - gen.random(n)) ** (-1.0 / ti)
        return ((w >= lo) & (w < hi)).astype(float)

    return conc.SummandFamily("slice-count", sampler, cap=1.0)


class TestConcentrationAudit:
    def test_degree_sums_zero_exceedances(self):
        res = conc.concentration_audit(degree_sum_family(), trials=400, seed=1)
        assert res.condition_ok
        assert res.exceedances == 0

    def test_slice_counts(self):
        res = conc.concentration_audit(slice_count_family(), trials=400,
                                       seed=2)
        assert res.condition_ok
        assert res.exceed_frequency <= 0.01

    def test_deterministic_summands_trivial(self):
        fam = conc.SummandFamily("const", lambda g: np.full(3000, 0.5),
                                 cap=0.5)
        res = conc.concentration_audit(fam, trials=50, seed=3)
        assert res.condition_ok
        assert res.exceedances == 0

    def test_condition_failure_skips(self):
        # tiny second moment against a huge declared cap
        fam = conc.SummandFamily("thin", lambda g: (g.random(500) < 1e-3)
                                 .astype(float) * 40.0, cap=40.0)
        res = conc.concentration_audit(fam, trials=60, seed=4)
        assert res.skipped
        assert not res.condition_ok
