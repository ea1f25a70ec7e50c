"""
Statistics service
统计后处理 - Wilcoxon 符号秩检验与样本汇总
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from gridkrig.core.config import settings
from gridkrig.core.exceptions import EmptySample, TooFewPairs
from gridkrig.schemas.stats import Summary, TestMethod, TestResult

logger = logging.getLogger(__name__)

MIN_PAIRS = 5


def _exact_p_value(doubled_ranks: np.ndarray, doubled_w_plus: int) -> float:
    """Two-sided p over all 2^n sign assignments, counted by convolution in doubled-rank units"""
    n = len(doubled_ranks)
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    at_most = int(counts[:doubled_w_plus + 1].sum())
    at_least = int(counts[doubled_w_plus:].sum())
    return min(1.0, 2 * min(at_most, at_least) / 2 ** n)


def _normal_p_value(ranks: np.ndarray, w_plus: float) -> float:
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    if variance <= 0.0:
        return 1.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(variance)
    return min(1.0, 2.0 * float(sps.norm.sf(z)))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float],
                         method: Optional[TestMethod] = None) -> TestResult:
    """Paired two-sided Wilcoxon signed-rank test.

    Zero differences are dropped and ties get midranks. All-zero input
    returns p = 1 with n_effective = 0. The exact null distribution is used
    up to EXACT_WILCOXON_MAX_N nonzero pairs, the normal approximation with
    tie-corrected variance and continuity correction above; `method` forces
    either path.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal lengths")
    diff = a - b
    diff = diff[diff != 0.0]
    n = len(diff)
    if n == 0 and len(a) > 0:
        return TestResult(statistic=0.0, p_value=1.0, n_effective=0, method=TestMethod.EXACT)
    if n < MIN_PAIRS:
        raise TooFewPairs(n, MIN_PAIRS)

    ranks = sps.rankdata(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    if method is None:
        method = TestMethod.EXACT if n <= settings.EXACT_WILCOXON_MAX_N else TestMethod.NORMAL_APPROX
    if method == TestMethod.EXACT:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        p_value = _exact_p_value(doubled, int(round(2.0 * w_plus)))
    else:
        p_value = _normal_p_value(ranks, w_plus)
    logger.debug(f"Wilcoxon n={n} W+={w_plus:g} W-={w_minus:g} p={p_value:.4g} ({method.value})")
    return TestResult(statistic=min(w_plus, w_minus), p_value=p_value, n_effective=n, method=method)


def summarize(samples: Sequence[float]) -> Summary:
    """Mean, sample std (n − 1), standard error and t-based 95% interval"""
    x = np.asarray(samples, dtype=float)
    n = len(x)
    if n == 0:
        raise EmptySample()
    if n == 1 or np.ptp(x) == 0.0:
        value = float(x[0])
        return Summary(mean=value, std=0.0, stderr=0.0, ci95_low=value, ci95_high=value, n=n)
    mean = float(np.mean(x))
    std = float(np.std(x, ddof=1))
    stderr = std / math.sqrt(n)
    half = float(sps.t.ppf(0.975, n - 1)) * stderr
    return Summary(mean=mean, std=std, stderr=stderr, ci95_low=mean - half, ci95_high=mean + half, n=n)
