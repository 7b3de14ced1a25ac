import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finshare.errors import ValidationError
from finshare.returns import (Degenerate, DiscreteFinite, ScaledBeta,
                              TruncatedNormal, Uniform, gauss_legendre, mean,
                              quantile_grid, variance)
from finshare.sharing import (Dominance, condition_flags, effective_share,
                              fr_financier, fr_investor, induced_distribution,
                              make_mps, pair_completeness_gap, sosd_dominates,
                              sr_financier, sr_investor, taylor_gap)
from finshare.utility import cara, log_shift, power, quadratic

WORKED = DiscreteFinite([(0.05, 0.5), (0.15, 0.5)])
BASE = DiscreteFinite([(0.04, 0.5), (0.06, 0.5)])
NOISE = DiscreteFinite([(-0.01, 0.5), (0.01, 0.5)])


class TestEffectiveShare:
    def test_linear_rule_is_its_share(self):
        for dist in (WORKED, Uniform(0.0, 1.0), ScaledBeta(2.0, 3.0)):
            assert effective_share(sr_investor(0.25), dist) == pytest.approx(0.25, abs=1e-12)

    def test_fr_financier_enumeration(self):
        # E[min(R, 0.1)] / E[R] = 0.075 / 0.10
        assert effective_share(fr_financier(0.10), WORKED) == pytest.approx(0.75, abs=1e-12)

    def test_fr_investor_enumeration(self):
        assert effective_share(fr_investor(0.10), WORKED) == pytest.approx(0.25, abs=1e-12)

    def test_paired_shares_sum_to_one(self):
        for dist in (WORKED, Uniform(0.0, 1.0), TruncatedNormal(0.15, 0.1)):
            for p_rule, y_rule in ((fr_financier(0.10), fr_investor(0.10)),
                                   (sr_financier(0.25), sr_investor(0.25))):
                total = effective_share(p_rule, dist) + effective_share(y_rule, dist)
                assert total == pytest.approx(1.0, abs=1e-12)


class TestConditionFlags:
    def test_sr_rule_strictly_between(self):
        flags = condition_flags(sr_investor(0.25), WORKED)
        assert flags["bounded_below"] and flags["bounded_above"]
        assert flags["strictly_between"]

    def test_fr_investor_attains_zero(self):
        flags = condition_flags(fr_investor(0.10), WORKED)
        assert flags["bounded_below"] and flags["bounded_above"]
        assert not flags["strictly_between"]  # payoff is 0 below the rate

    def test_boosted_rule_exempt(self):
        flags = condition_flags(fr_investor(0.10, boost=1.1), WORKED)
        assert flags["exempt_boosted"]


class TestPairCompleteness:
    def test_exact_on_worked_atoms(self):
        pts = np.asarray(WORKED.values)
        assert pair_completeness_gap(fr_financier(0.10), fr_investor(0.10), pts) == 0.0
        assert pair_completeness_gap(sr_financier(0.25), sr_investor(0.25), pts) == 0.0

    @pytest.mark.parametrize("d", [0.05, 0.1, 0.2, 0.4])
    def test_within_one_ulp_on_quadrature_nodes(self, d):
        x, _ = gauss_legendre(1e-9, 1.0 - 1e-9, 256)
        gap = pair_completeness_gap(fr_financier(d), fr_investor(d), x)
        assert gap <= float(np.max(np.spacing(x)))


class TestInducedDistribution:
    def test_fr_financier_pushforward(self):
        got = induced_distribution(fr_financier(0.10), WORKED)
        assert got == DiscreteFinite([(0.05, 0.5), (0.10, 0.5)])

    def test_sr_pushforward(self):
        got = induced_distribution(sr_investor(0.25), WORKED)
        assert got == DiscreteFinite([(0.0125, 0.5), (0.0375, 0.5)])

    def test_identity_rule(self):
        # a cap above the support leaves the law untouched
        got = induced_distribution(fr_financier(0.99), WORKED)
        assert got == WORKED

    def test_merges_flat_region(self):
        law = DiscreteFinite([(0.02, 0.25), (0.04, 0.25), (0.15, 0.5)])
        got = induced_distribution(fr_investor(0.10), law)
        assert got.probs == (0.5, 0.5)
        assert got.values[0] == 0.0
        assert got.values[1] == pytest.approx(0.05, abs=1e-15)


class TestMakeMps:
    def test_worked_example(self):
        pair = make_mps(BASE, NOISE)
        assert pair.spread.probs == (0.25, 0.5, 0.25)
        assert pair.spread.values == pytest.approx([0.03, 0.05, 0.07], abs=1e-15)
        assert mean(pair.spread) == pytest.approx(0.05, abs=1e-12)
        assert variance(pair.spread) == pytest.approx(0.0002, abs=1e-12)
        assert variance(pair.base) == pytest.approx(0.0001, abs=1e-12)

    def test_rejects_zero_variance_noise(self):
        with pytest.raises(ValidationError):
            make_mps(BASE, Degenerate(0.0))

    def test_rejects_nonzero_mean_noise(self):
        with pytest.raises(ValidationError, match="E\\(Z\\)"):
            make_mps(BASE, DiscreteFinite([(-0.01, 0.4), (0.01, 0.6)]))

    def test_degenerate_base_pure_shift(self):
        pair = make_mps(Degenerate(0.05), NOISE)
        assert pair.spread.probs == (0.5, 0.5)
        assert pair.spread.values == pytest.approx([0.04, 0.06], abs=1e-15)

    def test_mean_preserved_variance_added(self):
        base = DiscreteFinite([(0.02, 0.2), (0.05, 0.3), (0.11, 0.5)])
        noise = DiscreteFinite([(-0.004, 0.25), (-0.002, 0.25), (0.002, 0.25),
                                (0.004, 0.25)])
        pair = make_mps(base, noise)
        assert mean(pair.spread) == pytest.approx(mean(base), abs=1e-12)
        assert variance(pair.spread) == pytest.approx(
            variance(base) + variance(noise), abs=1e-12)


class TestSosd:
    def test_base_dominates_spread(self):
        pair = make_mps(BASE, NOISE)
        res = sosd_dominates(pair.base, pair.spread)
        assert res.relation is Dominance.DOMINATES
        assert res.max_violation <= 1e-12

    def test_spread_is_dominated(self):
        pair = make_mps(BASE, NOISE)
        assert sosd_dominates(pair.spread, pair.base).relation is Dominance.DOMINATED

    def test_self_comparison_equal(self):
        assert sosd_dominates(BASE, BASE).relation is Dominance.EQUAL

    def test_mean_gap_reported_as_incomparable(self):
        # pushforwards at (alpha*, D*) on the worked law: means 0.075 vs 0.025
        p_law = induced_distribution(fr_financier(0.10), WORKED)
        y_law = induced_distribution(sr_investor(0.25), WORKED)
        res = sosd_dominates(p_law, y_law)
        assert res.relation is Dominance.INCOMPARABLE
        assert res.mean_gap == pytest.approx(0.05, abs=1e-12)

    def test_crossing_integrals_incomparable(self):
        x = DiscreteFinite([(0.0, 0.5), (0.10, 0.5)])
        y = DiscreteFinite([(0.02, 0.8), (0.17, 0.2)])
        assert mean(x) == pytest.approx(mean(y), abs=1e-12)
        rel = sosd_dominates(x, y).relation
        assert rel is Dominance.INCOMPARABLE

    def test_discretized_continuous_pair(self):
        # base uniform vs the "same mean, more spread" scaled beta
        narrow = quantile_grid(Uniform(0.3, 0.7), 512)
        wide = quantile_grid(Uniform(0.1, 0.9), 512)
        res = sosd_dominates(narrow, wide, mean_tol=1e-6, integral_tol=1e-6)
        assert res.relation is Dominance.DOMINATES


class TestTaylorGap:
    def test_cara_enumeration_oracle(self):
        # exact = E[u(spread)] - E[u(base)] over the 4-outcome enumeration
        u = cara(10.0)
        pair = make_mps(BASE, NOISE)
        uval = lambda x: (1.0 - math.exp(-10.0 * x)) / 10.0
        eu_base = 0.5 * uval(0.04) + 0.5 * uval(0.06)
        eu_spread = 0.25 * uval(0.03) + 0.5 * uval(0.05) + 0.25 * uval(0.07)
        approx, exact = taylor_gap(u, pair)
        assert exact == pytest.approx(eu_spread - eu_base, abs=1e-15)
        assert exact == pytest.approx(-3.0504e-4, abs=1e-6)
        assert approx < 0.0 and exact < 0.0

    def test_quadratic_is_exact(self):
        # constant u'' makes the second-order expansion exact
        pair = make_mps(BASE, NOISE)
        for b in (0.1, 0.5, 0.9):
            approx, exact = taylor_gap(quadratic(b), pair)
            assert abs(approx - exact) <= 1e-14
            assert approx == pytest.approx(-(b / 2.0) * 0.0001, rel=1e-10)

    def test_linear_limit_near_zero(self):
        approx, exact = taylor_gap(quadratic(1e-8), make_mps(BASE, NOISE))
        assert abs(exact) <= 1e-9

    def test_ratio_controlled_for_small_noise(self):
        base = DiscreteFinite([(0.04, 0.5), (0.06, 0.5)])
        for scale in (0.01, 0.005, 0.002):
            noise = DiscreteFinite([(-scale, 0.5), (scale, 0.5)])
            pair = make_mps(base, noise)
            for u in (cara(10.0), power(0.5), log_shift(0.05)):
                approx, exact = taylor_gap(u, pair)
                assert 0.5 <= approx / exact <= 2.0


@st.composite
def payoff_laws(draw):
    n = draw(st.integers(2, 5))
    vals = draw(st.lists(st.floats(0.05, 0.5), min_size=n, max_size=n,
                         unique=True))
    weights = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    total = sum(weights)
    return DiscreteFinite([(v, w / total) for v, w in zip(vals, weights)])


@given(payoff_laws(), st.floats(1e-3, 0.04))
def test_mps_implies_sosd_and_utility_loss(base, scale):
    noise = DiscreteFinite([(-scale, 0.5), (scale, 0.5)])
    pair = make_mps(base, noise)
    assert sosd_dominates(pair.base, pair.spread).relation is Dominance.DOMINATES
    hi = pair.spread.hi * (1 + 1e-9)
    for u in (cara(10.0, 0.0, hi), quadratic(0.5, 0.0, hi),
              power(0.5, 0.0, hi), log_shift(0.05, 0.0, hi)):
        approx, exact = taylor_gap(u, pair)
        assert exact < 0.0
        assert approx < 0.0
