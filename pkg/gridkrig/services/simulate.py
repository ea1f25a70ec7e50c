"""
Simulation service
有限样本验证 - Cholesky 采样高斯过程、克里金预测与经验误差估计
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy import linalg

from gridkrig.core.config import settings
from gridkrig.core.exceptions import (
    BadSampleSize, CoincidentTestPoint, EmptyTestSet, ExtrapolationRequest,
    GridKrigError, NotPositiveDefinite, ReplicateFailure,
)
from gridkrig.schemas.simulate import ErrorSamples, ExperimentCell, PredictionSet, Realization
from gridkrig.schemas.spectral import CovarianceModel, GridDesign
from gridkrig.services.spectral import covariance, make_model

logger = logging.getLogger(__name__)


def build_grid(S: int, interval: Tuple[float, float] = (0.0, 1.0)) -> GridDesign:
    """S equally spaced points including both endpoints, h = (b − a)/(S − 1)"""
    if S < 2:
        raise BadSampleSize(S)
    lo, hi = float(interval[0]), float(interval[1])
    return GridDesign(dimension=1, steps=((hi - lo) / (S - 1),), extent=((lo, hi),), size=S)


def grid_points(grid: GridDesign) -> np.ndarray:
    (lo, hi), = grid.extent
    return np.linspace(lo, hi, grid.size)


def evaluation_points(grid: GridDesign, refinement: Optional[int] = None) -> np.ndarray:
    """Cell midpoints of a grid `refinement` times denser than the training grid.

    Point j sits at a + (j + 1/2)·h/refinement, so no test point meets a
    training point and the mean over test points is a midpoint-rule average
    over the interval.
    """
    refinement = refinement or settings.TEST_GRID_REFINEMENT
    (lo, _), = grid.extent
    step = grid.h / refinement
    count = refinement * (grid.size - 1)
    return lo + (np.arange(count) + 0.5) * step


def cholesky_with_jitter(matrix: np.ndarray, start: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """Lower Cholesky factor of matrix + jitter·I, jitter ×10 per failure from JITTER_START up to JITTER_MAX"""
    jitter = settings.JITTER_START if start is None else start
    eye = np.eye(matrix.shape[0])
    while jitter <= settings.JITTER_MAX * (1.0 + 1e-9):
        try:
            factor = linalg.cholesky(matrix + jitter * eye, lower=True, check_finite=False)
            return factor, jitter
        except linalg.LinAlgError:
            next_jitter = jitter * settings.JITTER_FACTOR
            logger.warning(f"Cholesky failed with jitter {jitter:.1e}, retrying with {next_jitter:.1e}")
            jitter = next_jitter
    raise NotPositiveDefinite(settings.JITTER_MAX)


def covariance_matrix(model: CovarianceModel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return covariance(model, np.subtract.outer(np.asarray(x, dtype=float), np.asarray(y, dtype=float)))


def sample_realization(model: CovarianceModel, grid: GridDesign, seed: int,
                       test_points: Optional[Iterable[float]] = None) -> Realization:
    """Draw L·Y₀ jointly on the training grid and the test points.

    K = [R(x_i − x_j)] + jitter·I over the union, Y₀ i.i.d. standard normal
    from numpy's default generator seeded with `seed`. test_points defaults
    to evaluation_points(grid).
    """
    train = grid_points(grid)
    test = evaluation_points(grid) if test_points is None else np.asarray(list(test_points), dtype=float)
    points = np.concatenate([train, test])
    factor, jitter = cholesky_with_jitter(covariance_matrix(model, points, points))
    rng = np.random.default_rng(seed)
    values = factor @ rng.standard_normal(len(points))
    logger.debug(f"Sampled {model.label} on {grid.size} + {len(test)} points, jitter {jitter:.1e}")
    return Realization(
        grid=grid, values=values[:grid.size], seed=seed, jitter_used=jitter,
        test_points=test, test_values=values[grid.size:],
    )


def sample_path(model: CovarianceModel, size: int, seed: int,
                interval: Tuple[float, float] = (0.0, 1.0)) -> Realization:
    """A single path on a fine grid, for plotting realizations"""
    return sample_realization(model, build_grid(size, interval), seed, test_points=[])


def _lookup_truth(realization: Realization, points: np.ndarray) -> np.ndarray:
    truth = np.full(len(points), np.nan)
    known = realization.test_points
    if len(known) == 0:
        return truth
    gaps = np.abs(np.subtract.outer(points, known))
    nearest = np.argmin(gaps, axis=1)
    hit = gaps[np.arange(len(points)), nearest] <= settings.COINCIDENCE_TOL
    truth[hit] = realization.test_values[nearest[hit]]
    return truth


def krige_predict(used_model: CovarianceModel, realization: Realization,
                  test_points: Iterable[float]) -> PredictionSet:
    """Posterior mean ŷ = k_*ᵀ(K_used + jitter·I)⁻¹y by Cholesky solve.

    Truth at a test point is taken from the realization's jointly sampled
    values, NaN where the point was not sampled.
    """
    points = np.asarray(list(test_points), dtype=float)
    train = realization.points
    interval = realization.grid.extent[0]
    for x in points:
        if not (interval[0] <= x <= interval[1]):
            raise ExtrapolationRequest(float(x), interval)
    if len(points):
        gaps = np.min(np.abs(np.subtract.outer(points, train)), axis=1)
        close = np.flatnonzero(gaps <= settings.COINCIDENCE_TOL)
        if len(close):
            raise CoincidentTestPoint(float(points[close[0]]))

    factor, jitter = cholesky_with_jitter(covariance_matrix(used_model, train, train), start=realization.jitter_used)
    if jitter != realization.jitter_used:
        logger.warning(f"Prediction covariance needed jitter {jitter:.1e} (sampling used {realization.jitter_used:.1e})")
    weights = linalg.cho_solve((factor, True), realization.values, check_finite=False)
    predicted = covariance_matrix(used_model, points, train) @ weights
    return PredictionSet(test_points=points, predicted=predicted, truth=_lookup_truth(realization, points))


def empirical_error(pred: PredictionSet) -> float:
    """Mean squared error over test points with known truth"""
    known = np.isfinite(pred.truth)
    if not known.any():
        raise EmptyTestSet()
    diff = pred.predicted[known] - pred.truth[known]
    return float(np.mean(diff * diff))


def derive_seed(seed_base: int, index: int) -> int:
    """Replicate seed: first 64-bit word of SeedSequence([seed_base, index])"""
    return int(np.random.SeedSequence([seed_base, index]).generate_state(1, np.uint64)[0])


def run_trial(cell: ExperimentCell, seed: int) -> Tuple[float, float]:
    """One realization under the true model, kriged with the used model: (error, jitter)"""
    grid = build_grid(cell.size, cell.interval)
    true_model = make_model(cell.family_true, cell.theta, cell.profile)
    used_model = make_model(cell.family_used, cell.theta_prime, cell.profile)
    realization = sample_realization(true_model, grid, seed)
    pred = krige_predict(used_model, realization, realization.test_points)
    return empirical_error(pred), realization.jitter_used


class MonteCarloRunner:
    """Runs replicates on a thread pool; results come back in replicate order"""

    def __init__(self, workers: Optional[int] = None):
        self.workers = workers

    def _replicate(self, cell: ExperimentCell, seed_base: int, index: int) -> Tuple[float, float]:
        try:
            return run_trial(cell, derive_seed(seed_base, index))
        except (GridKrigError, ArithmeticError, ValueError, linalg.LinAlgError) as e:
            logger.error(f"Replicate {index} of {cell.key} failed: {e}")
            raise ReplicateFailure(index, e) from e

    def run(self, cell: ExperimentCell, replicates: int, seed_base: int) -> ErrorSamples:
        if replicates < 1:
            raise ValueError("replicates must be >= 1")
        workers = min(self.workers or settings.worker_count, replicates)
        logger.info(f"Monte Carlo {cell.key}: {replicates} replicates on {workers} workers")
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results: List[Tuple[float, float]] = list(
                pool.map(lambda i: self._replicate(cell, seed_base, i), range(replicates))
            )
        return ErrorSamples(
            cell=cell,
            replicate_errors=[r[0] for r in results],
            seed_base=seed_base,
            jitters=[r[1] for r in results],
        )


# Global runner instance
monte_carlo_runner = MonteCarloRunner()


def run_monte_carlo(cell: ExperimentCell, replicates: int, seed_base: int) -> ErrorSamples:
    return monte_carlo_runner.run(cell, replicates, seed_base)
