import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finshare.errors import EvaluationError, ValidationError
from finshare.returns import (Degenerate, DiscreteFinite, QuadratureSpec,
                              ScaledBeta, TruncatedNormal, Uniform,
                              SUPPORT_EPS, as_finite, check_return_support,
                              expect, gauss_legendre, mean,
                              partial_expectation_call,
                              partial_expectation_min, quantile_grid, sample,
                              variance)

UNIT = Uniform(0.0, 1.0)

ALL_KINDS = [
    Degenerate(0.10),
    DiscreteFinite([(0.05, 0.5), (0.15, 0.5)]),
    UNIT,
    ScaledBeta(2.0, 3.0),
    TruncatedNormal(0.15, 0.10),
]


class TestConstruction:
    def test_uniform_clamped_inside_unit_interval(self):
        assert UNIT.lo == SUPPORT_EPS
        assert UNIT.hi == 1.0 - SUPPORT_EPS

    def test_discrete_atoms_sorted_ascending(self):
        d = DiscreteFinite([(0.15, 0.5), (0.05, 0.5)])
        assert d.values == (0.05, 0.15)

    def test_discrete_merges_close_atoms(self):
        d = DiscreteFinite([(0.1, 0.25), (0.1, 0.25), (0.2, 0.5)])
        assert d.values == (0.1, 0.2)
        assert d.probs == (0.5, 0.5)

    def test_discrete_rejects_bad_probabilities(self):
        with pytest.raises(ValidationError):
            DiscreteFinite([(0.1, 0.6), (0.2, 0.6)])
        with pytest.raises(ValidationError):
            DiscreteFinite([(0.1, 0.0), (0.2, 1.0)])

    def test_shape_parameters_positive(self):
        with pytest.raises(ValidationError):
            ScaledBeta(0.0, 1.0)
        with pytest.raises(ValidationError):
            TruncatedNormal(0.5, 0.0)

    def test_quadrature_node_count(self):
        with pytest.raises(ValidationError):
            QuadratureSpec(1)

    def test_return_support_check(self):
        check_return_support(DiscreteFinite([(0.05, 0.5), (0.15, 0.5)]))
        with pytest.raises(ValidationError):
            check_return_support(DiscreteFinite([(-0.01, 0.5), (0.15, 0.5)]))
        with pytest.raises(ValidationError):
            check_return_support(Degenerate(0.0))

    def test_gauss_legendre_weights_sum_to_width(self):
        for lo, hi in ((0.0, 1.0), (0.05, 0.15), (0.3, 0.9)):
            _, w = gauss_legendre(lo, hi, 256)
            assert abs(w.sum() - (hi - lo)) <= 1e-12


class TestMean:
    def test_degenerate_point_mass(self):
        assert mean(Degenerate(0.2)) == 0.2

    def test_discrete_enumeration_oracle(self):
        # oracle: 0.5*0.05 + 0.5*0.15, summed in ascending atom order
        d = DiscreteFinite([(0.05, 0.5), (0.15, 0.5)])
        assert mean(d) == 0.5 * 0.05 + 0.5 * 0.15

    def test_uniform_midpoint(self):
        assert abs(mean(UNIT) - 0.5) <= 1e-8


class TestVariance:
    def test_degenerate_zero(self):
        assert variance(Degenerate(0.2)) == 0.0

    def test_discrete_enumeration_oracle(self):
        d = DiscreteFinite([(0.05, 0.5), (0.15, 0.5)])
        m = 0.5 * 0.05 + 0.5 * 0.15
        oracle = 0.5 * (0.05 - m) ** 2 + 0.5 * (0.15 - m) ** 2
        assert variance(d) == oracle
        assert abs(variance(d) - 0.0025) <= 1e-12

    def test_uniform_closed_form(self):
        # (hi - lo)^2 / 12
        assert abs(variance(UNIT) - (UNIT.hi - UNIT.lo) ** 2 / 12.0) <= 1e-8


class TestExpect:
    def test_identity_matches_mean(self):
        d = DiscreteFinite([(0.05, 0.5), (0.15, 0.5)])
        assert expect(d, lambda r: r) == mean(d)

    @pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: type(d).__name__)
    def test_normalization(self, dist):
        assert abs(expect(dist, lambda r: np.ones_like(r)) - 1.0) <= 1e-10

    def test_kinked_transform_with_split(self):
        # closed form: E[min(R, D)] = D - D^2/2 on uniform(0,1)
        got = expect(UNIT, lambda r: np.minimum(r, 0.5), breakpoints=(0.5,))
        assert abs(got - (0.5 - 0.5 ** 2 / 2.0)) <= 1e-8

    def test_nonfinite_transform_reports_abscissa(self):
        with np.errstate(invalid="ignore"), pytest.raises(EvaluationError, match="r="):
            expect(UNIT, lambda r: np.log(r - 0.5))

    def test_discrete_enumeration_bit_for_bit(self):
        d = DiscreteFinite([(0.05, 0.25), (0.10, 0.25), (0.15, 0.5)])
        f = lambda r: r ** 2
        oracle = 0.0
        for v, p in ((0.05, 0.25), (0.10, 0.25), (0.15, 0.5)):
            oracle += p * f(v)
        assert expect(d, lambda r: np.asarray(r) ** 2) == oracle


class TestPartialExpectations:
    def test_discrete_min_oracle(self):
        d = DiscreteFinite([(0.05, 0.5), (0.15, 0.5)])
        assert abs(partial_expectation_min(d, 0.10) - (0.5 * 0.05 + 0.5 * 0.10)) <= 1e-15

    def test_discrete_call_oracle(self):
        d = DiscreteFinite([(0.05, 0.5), (0.15, 0.5)])
        assert abs(partial_expectation_call(d, 0.10) - (0.5 * 0.0 + 0.5 * 0.05)) <= 1e-15

    def test_degenerate(self):
        assert partial_expectation_min(Degenerate(0.2), 0.5) == 0.2
        assert partial_expectation_call(Degenerate(0.2), 0.5) == 0.0

    @pytest.mark.parametrize("d", [0.1, 0.3, 0.5, 0.9])
    def test_uniform_closed_forms(self, d):
        assert abs(partial_expectation_min(UNIT, d) - (d - d * d / 2.0)) <= 1e-8
        assert abs(partial_expectation_call(UNIT, d) - (1.0 - d) ** 2 / 2.0) <= 1e-8

    def test_rate_domain(self):
        with pytest.raises(ValidationError):
            partial_expectation_min(UNIT, 0.0)
        with pytest.raises(ValidationError):
            partial_expectation_call(UNIT, 1.0)

    @pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: type(d).__name__)
    @pytest.mark.parametrize("d", [0.05, 0.1, 0.2, 0.4])
    def test_decomposition_identity(self, dist, d):
        # min(r, d) + max(r - d, 0) = r pointwise
        total = partial_expectation_min(dist, d) + partial_expectation_call(dist, d)
        assert abs(total - mean(dist)) <= 1e-10

    @pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: type(d).__name__)
    def test_bounds(self, dist):
        d = 0.2
        e_min = partial_expectation_min(dist, d)
        e_call = partial_expectation_call(dist, d)
        assert 0.0 < e_min <= min(mean(dist), d) + 1e-12
        assert -1e-15 <= e_call <= mean(dist) + 1e-12


class TestSampling:
    def test_degenerate(self):
        assert sample(Degenerate(0.2), seed=1, n=3).tolist() == [0.2, 0.2, 0.2]

    def test_deterministic_per_seed(self):
        for dist in ALL_KINDS:
            a = sample(dist, seed=123, n=100)
            b = sample(dist, seed=123, n=100)
            assert np.array_equal(a, b)

    @pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: type(d).__name__)
    def test_draws_inside_unit_interval(self, dist):
        draws = sample(dist, seed=5, n=10_000)
        assert draws.min() > 0.0 and draws.max() < 1.0

    def test_clt_bound_on_discrete(self):
        # sigma = 0.05, so 4 sigma / sqrt(1e6) = 4 * 0.05 / 1000
        d = DiscreteFinite([(0.05, 0.5), (0.15, 0.5)])
        draws = sample(d, seed=99, n=1_000_000)
        assert abs(draws.mean() - 0.10) <= 4.0 * 0.05 / 1000.0

    @pytest.mark.parametrize("dist", ALL_KINDS, ids=lambda d: type(d).__name__)
    def test_quadrature_monte_carlo_agreement(self, dist):
        n = 1_000_000
        draws = sample(dist, seed=2024, n=n)
        for f, kinks in ((lambda r: r, ()),
                         (lambda r: np.minimum(r, 0.2), (0.2,)),
                         (lambda r: np.maximum(r - 0.2, 0.0), (0.2,))):
            quad_v = expect(dist, f, breakpoints=kinks)
            vals = f(draws)
            se = vals.std(ddof=1) / math.sqrt(n)
            assert abs(quad_v - vals.mean()) <= max(4.0 * se, 1e-12)


class TestQuantileGrid:
    def test_passthrough_for_discrete(self):
        d = DiscreteFinite([(0.05, 0.5), (0.15, 0.5)])
        assert quantile_grid(d) == d
        assert quantile_grid(Degenerate(0.3)) == as_finite(Degenerate(0.3))

    @pytest.mark.parametrize("dist", [UNIT, ScaledBeta(2.0, 3.0), TruncatedNormal(0.15, 0.1)],
                             ids=lambda d: type(d).__name__)
    def test_grid_preserves_mean(self, dist):
        g = quantile_grid(dist, 512)
        assert abs(mean(g) - mean(dist)) <= 2e-3


@given(st.lists(st.tuples(st.floats(0.01, 0.99), st.floats(0.01, 1.0)),
                min_size=1, max_size=8),
       st.floats(0.05, 0.95))
def test_decomposition_property(atoms, d):
    total = sum(p for _, p in atoms)
    law = DiscreteFinite([(v, p / total) for v, p in atoms])
    lhs = partial_expectation_min(law, d) + partial_expectation_call(law, d)
    assert abs(lhs - mean(law)) <= 1e-10
