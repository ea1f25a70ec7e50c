"""
Simulation service tests
网格构造、Cholesky 采样、克里金预测与蒙特卡洛测试
"""

import logging
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st, settings

from gridkrig.core.exceptions import (
    BadSampleSize, CoincidentTestPoint, EmptyTestSet, ExtrapolationRequest, NotPositiveDefinite, ReplicateFailure,
)
from gridkrig.schemas.simulate import ExperimentCell, PredictionSet, Realization
from gridkrig.schemas.spectral import CovarianceFamily, Profile
from gridkrig.services.simulate import (
    MonteCarloRunner, build_grid, cholesky_with_jitter, derive_seed, empirical_error, evaluation_points,
    grid_points, krige_predict, run_monte_carlo, run_trial, sample_path, sample_realization,
)
from gridkrig.services.theory import matched_error


def _cell(size=21, family_used=CovarianceFamily.EXPONENTIAL, theta_prime=1.0):
    return ExperimentCell(
        family_true=CovarianceFamily.EXPONENTIAL, theta=1.0,
        family_used=family_used, theta_prime=theta_prime, size=size,
    )


class TestGrid:
    """训练网格与测试网格"""

    def test_build_grid(self):
        grid = build_grid(11)
        assert grid.size == 11
        assert grid.h == pytest.approx(0.1)
        points = grid_points(grid)
        assert points[0] == 0.0 and points[-1] == 1.0

    def test_build_grid_on_interval(self):
        grid = build_grid(5, (2.0, 4.0))
        assert grid.h == pytest.approx(0.5)
        assert np.allclose(grid_points(grid), [2.0, 2.5, 3.0, 3.5, 4.0])

    @pytest.mark.parametrize("size", [0, 1, -3])
    def test_rejects_small_sample(self, size):
        with pytest.raises(BadSampleSize):
            build_grid(size)

    def test_evaluation_points_are_midpoints(self):
        points = evaluation_points(build_grid(3), refinement=5)
        assert len(points) == 10
        assert points[0] == pytest.approx(0.05)
        assert points[-1] == pytest.approx(0.95)

    @given(size=st.integers(min_value=2, max_value=200), refinement=st.integers(min_value=1, max_value=10))
    @settings(max_examples=100)
    def test_evaluation_points_avoid_training_points(self, size, refinement):
        """
        Feature: gridkrig, Property 5: 测试点落在区间内且不与训练点重合
        """
        grid = build_grid(size)
        points = evaluation_points(grid, refinement)
        assert len(points) == refinement * (size - 1)
        assert np.all((points > 0.0) & (points < 1.0))
        gaps = np.min(np.abs(np.subtract.outer(points, grid_points(grid))), axis=1)
        assert np.all(gaps >= 0.5 * grid.h / refinement * (1 - 1e-9))

    def test_default_refinement(self):
        assert len(evaluation_points(build_grid(11))) == 50


class TestCholesky:
    """抖动 Cholesky"""

    def test_first_attempt(self):
        factor, jitter = cholesky_with_jitter(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert jitter == 1e-8
        assert np.allclose(factor @ factor.T, [[2.0 + 1e-8, 1.0], [1.0, 2.0 + 1e-8]])

    def test_escalation(self, caplog):
        matrix = np.diag([1.0, -5e-7])
        with caplog.at_level(logging.WARNING):
            _, jitter = cholesky_with_jitter(matrix)
        assert jitter == pytest.approx(1e-6)
        assert "retrying" in caplog.text

    def test_gives_up(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_with_jitter(np.diag([1.0, -1.0]))


class TestSampling:
    """高斯过程采样"""

    def test_deterministic_in_seed(self, consistent_model):
        model = consistent_model(CovarianceFamily.MATERN32, 2.0)
        grid = build_grid(21)
        a = sample_realization(model, grid, 42)
        b = sample_realization(model, grid, 42)
        c = sample_realization(model, grid, 43)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.test_values, b.test_values)
        assert not np.array_equal(a.values, c.values)

    def test_joint_sample_shapes(self, consistent_model):
        realization = sample_realization(consistent_model(CovarianceFamily.EXPONENTIAL, 1.0), build_grid(11), 0)
        assert len(realization.values) == 11
        assert len(realization.test_points) == len(realization.test_values) == 50
        assert realization.jitter_used == 1e-8

    def test_realization_is_frozen(self, consistent_model):
        realization = sample_realization(consistent_model(CovarianceFamily.EXPONENTIAL, 1.0), build_grid(5), 0)
        with pytest.raises(ValueError):
            realization.values[0] = 1.0

    @pytest.mark.slow
    def test_marginal_variance(self, verbatim_exponential):
        model = verbatim_exponential(1.0)
        second_moments = [float(np.mean(sample_path(model, 200, seed).values ** 2)) for seed in range(2000)]
        assert np.mean(second_moments) == pytest.approx(math.sqrt(math.pi / 2), rel=0.1)

    @pytest.mark.parametrize("theta", [10.0, 100.0, 500.0])
    def test_squared_exponential_paths(self, theta, consistent_model):
        model = consistent_model(CovarianceFamily.SQUARED_EXPONENTIAL, theta)
        path = sample_path(model, 200, 7)
        assert len(path.values) == 200
        assert len(path.test_points) == 0
        assert np.all(np.isfinite(path.values))
        assert np.array_equal(path.values, sample_path(model, 200, 7).values)


class TestKriging:
    """克里金后验均值"""

    def test_rejects_coincident_point(self, consistent_model):
        model = consistent_model(CovarianceFamily.EXPONENTIAL, 1.0)
        realization = sample_realization(model, build_grid(11), 0)
        with pytest.raises(CoincidentTestPoint):
            krige_predict(model, realization, [0.25, 0.5])

    def test_rejects_extrapolation(self, consistent_model):
        model = consistent_model(CovarianceFamily.EXPONENTIAL, 1.0)
        realization = sample_realization(model, build_grid(11), 0)
        with pytest.raises(ExtrapolationRequest):
            krige_predict(model, realization, [1.5])

    def test_near_training_point(self, consistent_model):
        model = consistent_model(CovarianceFamily.EXPONENTIAL, 1.0)
        realization = sample_realization(model, build_grid(11), 3)
        pred = krige_predict(model, realization, [0.5 + 1e-6])
        assert pred.predicted[0] == pytest.approx(realization.values[5], abs=1e-4)

    def test_continuity_near_training_point(self, consistent_model):
        model = consistent_model(CovarianceFamily.EXPONENTIAL, 1.0)
        realization = sample_realization(model, build_grid(11), 8)
        gaps = [abs(krige_predict(model, realization, [0.5 + d]).predicted[0] - realization.values[5])
                for d in (1e-3, 1e-5)]
        assert gaps[1] < gaps[0]

    def test_linear_in_observations(self, consistent_model):
        model = consistent_model(CovarianceFamily.MATERN52, 1.0)
        grid = build_grid(9)
        rng = np.random.default_rng(5)
        y1, y2 = rng.standard_normal(9), rng.standard_normal(9)
        points = [0.13, 0.42, 0.77]

        def predict(values):
            realization = Realization(grid=grid, values=values, seed=0, jitter_used=1e-8)
            return krige_predict(model, realization, points).predicted

        assert np.allclose(predict(2.0 * y1 - 3.0 * y2), 2.0 * predict(y1) - 3.0 * predict(y2), atol=1e-10)

    def test_truth_lookup(self, consistent_model):
        model = consistent_model(CovarianceFamily.EXPONENTIAL, 1.0)
        realization = sample_realization(model, build_grid(11), 0)
        pred = krige_predict(model, realization, realization.test_points)
        assert np.array_equal(pred.truth, realization.test_values)

        unknown = krige_predict(model, realization, [0.123456])
        assert np.isnan(unknown.truth[0])
        with pytest.raises(EmptyTestSet):
            empirical_error(unknown)


class TestEmpiricalError:
    """经验误差"""

    def test_mean_squared_difference(self):
        pred = PredictionSet(test_points=[0.1, 0.2], predicted=[1.0, 2.0], truth=[2.0, 2.0])
        assert empirical_error(pred) == 0.5

    def test_skips_unknown_truth(self):
        pred = PredictionSet(test_points=[0.1, 0.2, 0.3], predicted=[1.0, 2.0, 9.0], truth=[2.0, 2.0, float("nan")])
        assert empirical_error(pred) == 0.5

    def test_empty_set(self):
        with pytest.raises(EmptyTestSet):
            empirical_error(PredictionSet(test_points=[], predicted=[], truth=[]))

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError):
            PredictionSet(test_points=[0.1], predicted=[1.0, 2.0], truth=[1.0])


class TestMonteCarlo:
    """蒙特卡洛重复"""

    def test_derive_seed(self):
        assert derive_seed(0, 0) == derive_seed(0, 0)
        seeds = {derive_seed(0, i) for i in range(100)}
        assert len(seeds) == 100
        assert all(0 <= s < 2 ** 64 for s in seeds)
        assert derive_seed(1, 0) != derive_seed(0, 0)

    def test_single_replicate_equals_trial(self, single_worker):
        cell = _cell()
        samples = run_monte_carlo(cell, 1, 11)
        assert samples.replicate_errors == [run_trial(cell, derive_seed(11, 0))[0]]
        assert samples.jitters == [1e-8]
        assert samples.seed_base == 11

    def test_independent_of_worker_count(self):
        cell = _cell(theta_prime=3.0)
        serial = MonteCarloRunner(workers=1).run(cell, 6, 2)
        parallel = MonteCarloRunner(workers=4).run(cell, 6, 2)
        assert serial.replicate_errors == parallel.replicate_errors

    def test_rejects_zero_replicates(self):
        with pytest.raises(ValueError):
            MonteCarloRunner(workers=1).run(_cell(), 0, 0)

    def test_wraps_replicate_failure(self, mocker):
        mocker.patch("gridkrig.services.simulate.run_trial", side_effect=NotPositiveDefinite(1e-4))
        with pytest.raises(ReplicateFailure) as info:
            MonteCarloRunner(workers=1).run(_cell(), 3, 0)
        assert info.value.index == 0
        assert isinstance(info.value.cause, NotPositiveDefinite)

    def test_misspecified_cell_runs(self, single_worker):
        samples = run_monte_carlo(_cell(family_used=CovarianceFamily.MATERN32, theta_prime=5.0), 3, 0)
        assert len(samples.replicate_errors) == 3
        assert all(e > 0 for e in samples.replicate_errors)

    @pytest.mark.slow
    @pytest.mark.parametrize("size", [101, 251])
    def test_agrees_with_theory(self, size, consistent_model):
        """
        Feature: gridkrig, Property 6: 指数核的蒙特卡洛均值与谱理论误差一致
        """
        cell = ExperimentCell(
            family_true=CovarianceFamily.EXPONENTIAL, theta=1.0, family_used=CovarianceFamily.EXPONENTIAL,
            theta_prime=1.0, size=size, profile=Profile.CONSISTENT,
        )
        samples = run_monte_carlo(cell, 20, 0)
        theory = matched_error(consistent_model(CovarianceFamily.EXPONENTIAL, 1.0), cell.h)
        assert samples.mean == pytest.approx(theory, rel=0.15)
