"""
Theory service tests
理论误差、闭式解与界的测试
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st, settings

from gridkrig.core.exceptions import BadGridStep, NonPositiveTheta, ProfileMismatch, UnsupportedDimension
from gridkrig.schemas.spectral import CovarianceFamily, GridDesign, Profile
from gridkrig.schemas.theory import ErrorQuery, MinimaxQuery, QuadratureSpec
from gridkrig.services.quadrature import quadrature
from gridkrig.services.spectral import make_model, spectral_density
from gridkrig.services.theory import (
    aliasing_ratio_error, as_design, evaluate_query, exponential_component_integrals, exponential_component_quadrature,
    exponential_error_asymptotic, exponential_misspec_closed, matched_error, minimax_curve, minimax_error,
    misspec_error, se_error_bounds, _exact_integrand, _ratio_integrand,
)
from tests.conftest import ALL_FAMILIES

# (θ, h) pairs inside the squared-exponential bound regime (h√θ ≤ 0.2)
SE_BOUND_FIXTURES = [(1.0, 0.1), (1.0, 0.15), (1.0, 0.2), (4.0, 0.075), (0.25, 0.4)]

# 50 (θ, θ′/θ, θh) points for the exponential closed form
CLOSED_FORM_GRID = list(itertools.product([0.1, 0.5, 1.0, 2.0, 5.0], [0.1, 0.5, 1.0, 2.0, 10.0], [1e-3, 1e-2]))


class TestMinimax:
    """极小极大误差"""

    def test_unit_case(self):
        query = MinimaxQuery(L=2 * math.pi ** 2, steps=(0.5, 1.0, 0.25))
        assert minimax_error(query) == pytest.approx(1.0, rel=1e-15)

    def test_formula_value(self):
        assert minimax_error(MinimaxQuery(L=1.0, steps=(0.1, 0.2))) == pytest.approx(2.0264e-3, rel=1e-4)

    @given(
        k=st.floats(min_value=1e-3, max_value=1e3),
        steps=st.lists(st.floats(min_value=1e-3, max_value=10.0), min_size=1, max_size=5),
    )
    @settings(max_examples=100)
    def test_linear_in_budget(self, k, steps):
        """
        Feature: gridkrig, Property 3: R(kL) = k·R(L)
        """
        base = minimax_error(MinimaxQuery(L=1.0, steps=tuple(steps)))
        assert minimax_error(MinimaxQuery(L=k, steps=tuple(steps))) == pytest.approx(k * base, rel=1e-12)

    def test_max_over_axes(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            steps = tuple(rng.uniform(0.01, 2.0, size=rng.integers(1, 5)))
            expected = max(steps) ** 2 / (2 * math.pi ** 2)
            assert minimax_error(MinimaxQuery(L=1.0, steps=steps)) == pytest.approx(expected, rel=1e-14)

    def test_rejects_empty_steps(self):
        with pytest.raises(ValueError):
            MinimaxQuery(L=1.0, steps=())

    def test_curve(self):
        curve = minimax_curve(2.0, [0.1, 0.2])
        assert [h for h, _ in curve] == [0.1, 0.2]
        assert curve[1][1] == pytest.approx(4 * curve[0][1])


class TestAsymptoticsAndBounds:
    """渐近式与误差界"""

    def test_exponential_asymptotic_value(self):
        assert exponential_error_asymptotic(0.1, 0.01) == pytest.approx(6.5797e-3, rel=1e-4)

    def test_exponential_asymptotic_linear_in_theta(self):
        assert exponential_error_asymptotic(1e-6, 0.01) == pytest.approx(1e-5 * exponential_error_asymptotic(0.1, 0.01))

    def test_se_bounds_value(self):
        lower, upper = se_error_bounds(1.0, 0.15)
        assert lower == pytest.approx(7.732e-4, rel=1e-3)
        assert upper == pytest.approx(4.059e-3, rel=1e-3)

    @given(theta=st.floats(min_value=0.01, max_value=100.0), h=st.floats(min_value=0.01, max_value=2.0))
    @settings(max_examples=100)
    def test_se_bound_ratio(self, theta, h):
        lower, upper = se_error_bounds(theta, h)
        assert lower <= upper
        if upper > 1e-300:
            assert lower / upper == pytest.approx(4.0 / 21.0, rel=1e-12)

    @pytest.mark.parametrize("args", [(0.0, 0.1), (1.0, 0.0), (-1.0, 0.1)])
    def test_rejects_non_positive(self, args):
        with pytest.raises(ValueError):
            se_error_bounds(*args)
        with pytest.raises(ValueError):
            exponential_error_asymptotic(*args)


class TestQuadrature:
    """数值积分"""

    @pytest.mark.parametrize("theta", [0.1, 1.0, 10.0])
    def test_lorentzian_mass(self, theta, tight_quadrature):
        value = quadrature(lambda w: theta / (theta ** 2 + w ** 2), tight_quadrature)
        assert value == pytest.approx(math.pi, abs=1e-10)

    def test_zero_function(self):
        assert quadrature(lambda w: 0.0) == 0.0
        assert quadrature(lambda w: 0.0, lower=0.0, upper=1.0) == 0.0

    def test_finite_interval_with_period(self):
        value = quadrature(lambda w: math.sin(math.pi * w) ** 2, lower=0.0, upper=10.0, period=1.0)
        assert value == pytest.approx(5.0, rel=1e-10)

    def test_tail_bound_window(self):
        """∫ 1/(1+ω²)² = π/2, tail ≤ 2/(3W³)"""
        value = quadrature(lambda w: 1.0 / (1.0 + w * w) ** 2, tail_bound=lambda W: 2.0 / (3.0 * W ** 3), even=True)
        assert value == pytest.approx(math.pi / 2, rel=2e-9)

    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_consistent_density_integrates_to_variance(self, family, tight_quadrature):
        model = make_model(family, 2.0)
        value = quadrature(lambda w: float(spectral_density(model, w)), tight_quadrature)
        assert value == pytest.approx(1.0, abs=1e-9)


class TestComponentIntegrals:
    """指数族闭式解的三个分量积分"""

    @pytest.mark.parametrize("theta", [0.1, 1.0, 10.0])
    @pytest.mark.parametrize("theta_prime", [0.1, 1.0, 10.0])
    def test_quadrature_matches_analytic(self, theta, theta_prime, tight_quadrature):
        analytic = exponential_component_integrals(theta, theta_prime, 0.01)
        numeric = exponential_component_quadrature(theta, theta_prime, 0.01, tight_quadrature)
        assert analytic[0] == math.pi
        assert analytic[1] == pytest.approx(math.pi / (theta + theta_prime), rel=1e-15)
        for a, n in zip(analytic, numeric):
            assert n == pytest.approx(a, abs=1e-10)

    def test_singular_branch_is_continuous(self):
        at = exponential_component_integrals(1.0, 1.0, 0.01)[2]
        near = exponential_component_integrals(1.0, 1.0 + 1e-4, 0.01)[2]
        assert near == pytest.approx(at, rel=1e-3)


class TestClosedForm:
    """指数族误设闭式解"""

    def test_matched_case_equals_quadrature(self, verbatim_exponential):
        model = verbatim_exponential(1.0)
        closed = exponential_misspec_closed(1.0, 1.0, 0.01)
        assert closed == pytest.approx(matched_error(model, 0.01), rel=1e-8)

    def test_matched_case_equals_series_limit(self):
        exact = exponential_misspec_closed(1.0, 1.0, 0.01)
        assert exponential_misspec_closed(1.0, 1.0 + 5e-7, 0.01) == pytest.approx(exact, rel=1e-7)
        assert exponential_misspec_closed(1.0, 1.0 + 1.5e-6, 0.01) == pytest.approx(exact, rel=2e-7)

    def test_misspecified_case_equals_ratio_quadrature(self, verbatim_exponential):
        closed = exponential_misspec_closed(0.1, 1.0, 0.004)
        numeric = aliasing_ratio_error(verbatim_exponential(0.1), verbatim_exponential(1.0), 0.004)
        assert closed == pytest.approx(numeric, rel=1e-8)

    @pytest.mark.parametrize("theta_prime", [0.1, 1.0])
    def test_leading_term_independent_of_theta_prime(self, theta_prime):
        leading = exponential_error_asymptotic(0.1, 1e-4)
        assert exponential_misspec_closed(0.1, theta_prime, 1e-4) == pytest.approx(leading, rel=0.01)

    @pytest.mark.slow
    @pytest.mark.parametrize("theta,factor,theta_h", CLOSED_FORM_GRID)
    def test_agrees_with_ratio_quadrature_on_grid(self, theta, factor, theta_h, verbatim_exponential):
        h = theta_h / theta
        closed = exponential_misspec_closed(theta, theta * factor, h)
        numeric = aliasing_ratio_error(verbatim_exponential(theta), verbatim_exponential(theta * factor), h)
        assert closed == pytest.approx(numeric, rel=1e-8)


class TestMatchedError:
    """匹配误差"""

    def test_exponential_asymptotic_regime(self, verbatim_exponential):
        theta, h = 0.1, 1e-3
        ratio = matched_error(verbatim_exponential(theta), h) / exponential_error_asymptotic(theta, h)
        assert 0.98 <= ratio <= 1.02

    @pytest.mark.parametrize("theta,h", SE_BOUND_FIXTURES)
    def test_squared_exponential_within_bounds(self, theta, h):
        model = make_model(CovarianceFamily.SQUARED_EXPONENTIAL, theta, Profile.PAPER_VERBATIM)
        lower, upper = se_error_bounds(theta, h)
        assert lower <= matched_error(model, h) <= upper

    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_decreases_under_refinement(self, family, consistent_model):
        model = consistent_model(family, 1.0)
        if family == CovarianceFamily.SQUARED_EXPONENTIAL:
            ladder = np.linspace(1.0, 0.6, 10)
        else:
            ladder = np.geomspace(0.5, 0.02, 10)
        errors = [matched_error(model, h) for h in ladder]
        assert all(b < a for a, b in zip(errors, errors[1:]))

    def test_squared_exponential_with_underflowing_aliases(self, consistent_model):
        model = consistent_model(CovarianceFamily.SQUARED_EXPONENTIAL, 1.0)
        value = matched_error(model, 0.1)
        assert math.isfinite(value)
        assert 0.0 <= value < 1e-100
        used = consistent_model(CovarianceFamily.SQUARED_EXPONENTIAL, 10.0)
        assert math.isfinite(misspec_error(model, used, 0.1))
        assert math.isfinite(aliasing_ratio_error(model, used, 0.1))

    def test_squared_exponential_two_dimensional_small_steps(self, consistent_model):
        model = consistent_model(CovarianceFamily.SQUARED_EXPONENTIAL, 1.0)
        value = matched_error(model, GridDesign(dimension=2, steps=(0.1, 0.1)))
        assert math.isfinite(value) and value >= 0.0

    def test_integrands_finite_when_denominator_underflows(self):
        # s = 1e-206 so s² underflows to zero
        assert _exact_integrand(1e-206, 1e-250, 1e-206, 0.0, 0.0, 0.0) == 2e-250
        assert _ratio_integrand(1e-206, 1e-250, 1e-206, 0.0, 0.0, 0.0) == 1e-250
        value = _exact_integrand(1e-206, 1e-250, 1e-206, 1e-215, 0.0, 0.0)
        assert math.isfinite(value) and value >= 0.0

    def test_separable_two_dimensional(self, consistent_model):
        """Separable SE: σ²₂ = 1 − (1 − σ²ₓ)(1 − σ²ᵧ)"""
        model = consistent_model(CovarianceFamily.SQUARED_EXPONENTIAL, 1.0)
        sx, sy = matched_error(model, 1.0), matched_error(model, 0.8)
        joint = matched_error(model, GridDesign(dimension=2, steps=(1.0, 0.8)))
        assert joint == pytest.approx(1.0 - (1.0 - sx) * (1.0 - sy), rel=1e-5)

    def test_accepts_design_or_step(self, verbatim_exponential):
        model = verbatim_exponential(1.0)
        assert matched_error(model, 0.1) == matched_error(model, GridDesign(steps=(0.1,)))

    @pytest.mark.parametrize("bad", [0.0, -0.1, float("nan")])
    def test_rejects_bad_step(self, bad, verbatim_exponential):
        with pytest.raises(BadGridStep):
            matched_error(verbatim_exponential(1.0), bad)

    def test_rejects_three_dimensions(self):
        with pytest.raises(UnsupportedDimension):
            as_design((0.1, 0.1, 0.1))


class TestMisspecError:
    """误设误差"""

    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_identity(self, family, consistent_model):
        model = consistent_model(family, 1.0)
        assert misspec_error(model, model, 0.1) == matched_error(model, 0.1)
        assert aliasing_ratio_error(model, model, 0.1) == pytest.approx(matched_error(model, 0.1), rel=1e-8)

    @pytest.mark.slow
    @given(
        family=st.sampled_from(ALL_FAMILIES),
        theta=st.floats(min_value=0.5, max_value=2.0),
        factor=st.sampled_from([0.25, 0.5, 2.0, 4.0]),
        h=st.sampled_from([0.1, 0.25, 0.5, 1.0]),
    )
    @settings(max_examples=100, deadline=None)
    def test_dominance(self, family, theta, factor, h):
        """
        Feature: gridkrig, Property 4: 误设误差不小于匹配误差
        """
        true_model = make_model(family, theta)
        used_model = make_model(family, theta * factor)
        matched = matched_error(true_model, h)
        assert misspec_error(true_model, used_model, h) >= matched * (1 - 1e-7) - 1e-12

    def test_matern32_strictly_worse(self, consistent_model):
        true_model = consistent_model(CovarianceFamily.MATERN32, 1.0)
        used_model = consistent_model(CovarianceFamily.MATERN32, 10.0)
        matched = matched_error(true_model, 0.05)
        assert misspec_error(true_model, used_model, 0.05) > matched * (1 + 1e-3)

    def test_cross_family(self, consistent_model):
        true_model = consistent_model(CovarianceFamily.MATERN32, 1.0)
        used_model = consistent_model(CovarianceFamily.EXPONENTIAL, 1.0)
        assert misspec_error(true_model, used_model, 0.05) > matched_error(true_model, 0.05)

    def test_theta_prime_invariance_first_order(self, verbatim_exponential):
        theta, h = 0.1, 1e-3
        leading = exponential_error_asymptotic(theta, h)
        values = [misspec_error(verbatim_exponential(theta), verbatim_exponential(tp), h)
                  for tp in (theta / 10, theta, 10 * theta)]
        ratios = [v / leading for v in values]
        assert max(ratios) - min(ratios) <= 0.01

    def test_table_pattern(self, consistent_model):
        """θ′ columns agree at fixed h; error/h is flat across h"""
        theta = 0.1
        true_model = consistent_model(CovarianceFamily.EXPONENTIAL, theta)
        columns = {}
        for tp in (0.1, 1.0, 10.0):
            used = consistent_model(CovarianceFamily.EXPONENTIAL, tp)
            columns[tp] = [misspec_error(true_model, used, h) for h in (0.01, 0.004, 0.0025)]
        at_h = [col[0] for col in columns.values()]
        assert max(at_h) / min(at_h) <= 1.05
        for col in columns.values():
            slopes = [v / h for v, h in zip(col, (0.01, 0.004, 0.0025))]
            assert max(slopes) / min(slopes) <= 1.10

    def test_profile_mismatch(self, verbatim_exponential, consistent_model):
        with pytest.raises(ProfileMismatch):
            misspec_error(verbatim_exponential(1.0), consistent_model(CovarianceFamily.EXPONENTIAL, 1.0), 0.1)

    def test_verbatim_exponential_has_no_2d_form(self, verbatim_exponential):
        with pytest.raises(UnsupportedDimension):
            matched_error(verbatim_exponential(1.0), (0.1, 0.1))

    def test_non_positive_theta_rejected_by_closed_form(self):
        with pytest.raises(NonPositiveTheta):
            exponential_misspec_closed(0.0, 1.0, 0.01)

    def test_quadrature_spec_is_respected(self, verbatim_exponential):
        loose = QuadratureSpec(relative_tolerance=1e-4, absolute_tolerance=1e-8)
        model = verbatim_exponential(1.0)
        assert matched_error(model, 0.05, loose) == pytest.approx(matched_error(model, 0.05), rel=1e-4)


class TestErrorQuery:
    """查询对象"""

    def test_query_matches_direct_call(self, consistent_model):
        true_model = consistent_model(CovarianceFamily.MATERN32, 1.0)
        used_model = consistent_model(CovarianceFamily.MATERN32, 3.0)
        query = ErrorQuery(true_model=true_model, used_model=used_model, design=as_design(0.2))
        assert evaluate_query(query) == misspec_error(true_model, used_model, 0.2)
        assert evaluate_query(query, "ratio") == aliasing_ratio_error(true_model, used_model, 0.2)
