"""
Adaptive quadrature
自适应数值积分 - scipy.integrate.quad 封装，带窗口增长与解析尾部界
"""

import logging
import math
import warnings
from typing import Callable, Iterable, List, Optional

import numpy as np
from scipy import integrate

from gridkrig.core.exceptions import QuadratureFailure
from gridkrig.schemas.theory import QuadratureSpec

logger = logging.getLogger(__name__)

Integrand = Callable[[float], float]
TailBound = Callable[[float], float]


def _pieces(lower: float, upper: float, period: Optional[float]) -> List[tuple]:
    if not period:
        return [(lower, upper)]
    edges = [lower]
    start = math.floor(lower / period) + 1
    stop = math.ceil(upper / period)
    edges.extend(k * period for k in range(start, stop) if lower < k * period < upper)
    edges.append(upper)
    return list(zip(edges[:-1], edges[1:]))


def _quad_piece(integrand: Integrand, lower: float, upper: float, spec: QuadratureSpec,
                epsabs: float, breakpoints: Optional[Iterable[float]]) -> float:
    points = None
    if breakpoints is not None and math.isfinite(lower) and math.isfinite(upper):
        points = sorted({float(p) for p in breakpoints if lower < p < upper})
    limit = spec.max_subdivisions
    if points:
        limit = max(limit, 2 * len(points) + 4)
    result = integrate.quad(
        integrand, lower, upper,
        epsabs=epsabs, epsrel=spec.relative_tolerance,
        limit=limit, points=points or None, full_output=1,
    )
    value, error = result[0], result[1]
    if len(result) > 3:
        raise QuadratureFailure(
            f"quad on [{lower:g}, {upper:g}] did not reach tolerance: {result[3]}",
            estimate=value, error=error,
        )
    return value


def integrate_segment(integrand: Integrand, lower: float, upper: float, spec: QuadratureSpec,
                      breakpoints: Optional[Iterable[float]] = None, period: Optional[float] = None) -> float:
    pieces = _pieces(lower, upper, period) if math.isfinite(lower) and math.isfinite(upper) else [(lower, upper)]
    epsabs = spec.absolute_tolerance / len(pieces)
    breakpoints = list(breakpoints) if breakpoints is not None else None
    return math.fsum(_quad_piece(integrand, a, b, spec, epsabs, breakpoints) for a, b in pieces)


def quadrature(integrand: Integrand, spec: Optional[QuadratureSpec] = None, lower: float = -math.inf,
               upper: float = math.inf, *, breakpoints: Optional[Iterable[float]] = None,
               tail_bound: Optional[TailBound] = None, period: Optional[float] = None,
               even: bool = False) -> float:
    """Integrate a scalar integrand.

    Finite limits go straight to adaptive Gauss-Kronrod. Whole-line integrals
    with a tail_bound integrate |ω| <= W and grow W until tail_bound(W), the
    bound on both tails together, is below max(absolute, relative·|I|).
    Without a tail_bound, infinite limits use QUADPACK's mapped rule.
    """
    spec = spec or QuadratureSpec()
    if math.isfinite(lower) and math.isfinite(upper):
        return integrate_segment(integrand, lower, upper, spec, breakpoints, period)
    if tail_bound is None:
        return integrate_segment(integrand, lower, upper, spec)

    rule = spec.tail_cut
    inner, window = 0.0, rule.initial_window
    parts: List[float] = []
    while True:
        if even:
            parts.append(2.0 * integrate_segment(integrand, inner, window, spec, breakpoints, period))
        else:
            parts.append(integrate_segment(integrand, inner, window, spec, breakpoints, period))
            parts.append(integrate_segment(integrand, -window, -inner, spec, breakpoints, period))
        total = math.fsum(parts)
        bound = tail_bound(window)
        if bound <= max(spec.absolute_tolerance, spec.relative_tolerance * abs(total)):
            logger.debug(f"Whole-line quadrature window W={window:g}, tail bound {bound:.3e}")
            return total
        inner, window = window, window * rule.growth
        if window > rule.max_window:
            raise QuadratureFailure(
                f"tail bound {bound:.3e} still above tolerance at window {inner:g}", estimate=total,
            )


def quadrature_2d(integrand: Callable[[float, float], float], x_range: tuple, y_range: tuple,
                  spec: Optional[QuadratureSpec] = None) -> float:
    """Nested adaptive quadrature over a rectangle; integrand(x, y)"""
    spec = spec or QuadratureSpec()
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, error = integrate.dblquad(
                lambda y, x: integrand(x, y),
                x_range[0], x_range[1], y_range[0], y_range[1],
                epsabs=spec.absolute_tolerance, epsrel=spec.relative_tolerance,
            )
        except integrate.IntegrationWarning as e:
            raise QuadratureFailure(f"2-D quadrature did not reach tolerance: {e}") from e
    return value


def geometric_breakpoints(scales: Iterable[float], upper: float, decades: int = 7) -> np.ndarray:
    """Breakpoints clustered near 0 and near upper at the given frequency scales"""
    points = list(np.linspace(0.0, upper, 9)[1:-1])
    for scale in scales:
        for j in range(-3, decades):
            offset = scale * 10.0 ** j
            if 0.0 < offset < upper:
                points.append(offset)
                points.append(upper - offset)
    return np.unique(np.asarray(points))
