"""
Theory service
理论插值误差 - 匹配/误设误差的数值积分、极小极大误差与指数族闭式解

σ² is integrated over one aliasing cell: for ω in the cell every frequency
ω + k/h contributes, and the folded integrand is written in alias-only sums so
nothing cancels when the grid is dense. With t_k = F_true(ω + k/h) and
u_k = F_used(ω + k/h):

    exact   E = [t0·Û² + (u0² + S²)·T̂ − 2S·C_tu + (t0 + T̂)·C_uu] / S²
    ratio   E = [t0·Û + T̂·S − C_tu] / S

where T̂, Û are Σ_{k≠0} t_k, u_k, S = u0 + Û, C_tu = Σ_{k≠0} t_k·u_k and
C_uu = Σ_{k≠0} u_k². The exact form is the mean squared error of the used
predictor under the true process; the ratio form is ∫F_true·A_used. Both agree
when used = true.
"""

import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from gridkrig.core.config import settings
from gridkrig.core.exceptions import (
    BadGridStep, NoConvergence, NonPositiveTheta, ProfileMismatch, UnsupportedDimension,
)
from gridkrig.schemas.spectral import CovarianceModel, GridDesign, SumMode
from gridkrig.schemas.theory import ErrorQuery, MinimaxQuery, QuadratureSpec
from gridkrig.services.quadrature import geometric_breakpoints, quadrature, quadrature_2d
from gridkrig.services.spectral import (
    GaussForm, SpectralForm, _TINY, _wrap, alias_components, aliasing_fraction, spectral_form,
)

logger = logging.getLogger(__name__)

DesignLike = Union[GridDesign, float, Sequence[float]]


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def as_design(design: DesignLike) -> GridDesign:
    """Accept a GridDesign, a step, or a tuple of per-axis steps"""
    if isinstance(design, GridDesign):
        return design
    steps = tuple(float(s) for s in np.atleast_1d(design))
    if len(steps) not in (1, 2):
        raise UnsupportedDimension(len(steps))
    if any(not (s > 0 and math.isfinite(s)) for s in steps):
        raise BadGridStep(steps)
    try:
        return GridDesign(dimension=len(steps), steps=steps)
    except ValidationError as e:
        raise BadGridStep(steps) from e


def _check_positive(theta: float, *steps: float) -> None:
    if not (theta > 0) or not math.isfinite(theta):
        raise NonPositiveTheta(theta)
    for h in steps:
        if not (h > 0) or not math.isfinite(h):
            raise BadGridStep(h)


# ---------------------------------------------------------------------------
# Transfer function
# ---------------------------------------------------------------------------

def transfer_function(used_model: CovarianceModel, omega, h) -> float:
    """K̂(ω) = F(ω) / Σ_k F(ω + k/h) = 1 − A(ω)"""
    mode = SumMode.CLOSED_FORM if spectral_form(used_model, len(np.atleast_1d(h))).has_closed_alias_sum() \
        else SumMode.TRUNCATED
    return 1.0 - aliasing_fraction(used_model, used_model, omega, h, mode=mode)


# ---------------------------------------------------------------------------
# Alias sums needed by the folded integrand
# ---------------------------------------------------------------------------

def _product_sums_1d(tf: SpectralForm, uf: SpectralForm, omega: float, h: float, tol: float,
                     max_terms: int) -> Tuple[float, float]:
    """(Σ_{k≠0} t_k·u_k, Σ_{k≠0} u_k²) truncated at |k| <= K with a monotone tail bound"""
    w = abs(_wrap(omega, h))
    K = 64
    while True:
        k = np.arange(1, K + 1, dtype=float)
        right, left = k / h + w, k / h - w
        t = np.concatenate([tf.density(right), tf.density(left)])
        u = np.concatenate([uf.density(right), uf.density(left)])
        c_tu = math.fsum(t * u)
        c_uu = math.fsum(u * u)
        r = (K - 0.5) / h
        ft, fu = float(tf.density(r)), float(uf.density(r))
        gt, gu = tf.tail_integral(r), uf.tail_integral(r)
        bound_tu = 2.0 * h * min(ft * gu, fu * gt)
        bound_uu = 2.0 * h * fu * gu
        if r >= max(tf.convex_from, uf.convex_from) and bound_tu <= tol * c_tu + _TINY \
                and bound_uu <= tol * c_uu + _TINY:
            return c_tu, c_uu
        K *= 2
        if 2 * K > max_terms:
            raise NoConvergence(f"alias product sums did not certify tolerance {tol:g}", terms=2 * K)


def _cell_terms_1d(tf: SpectralForm, uf: SpectralForm, omega: float, h: float, tol: float,
                   max_terms: int) -> Tuple[float, ...]:
    t0, t_alias = alias_components(tf, omega, h, tol=tol, max_terms=max_terms)
    if uf is tf:
        u0, u_alias = t0, t_alias
    else:
        u0, u_alias = alias_components(uf, omega, h, tol=tol, max_terms=max_terms)
    c_tu, c_uu = _product_sums_1d(tf, uf, omega, h, tol, max_terms)
    return t0, t_alias, u0, u_alias, c_tu, c_uu


def _axis_terms(tf: GaussForm, uf: GaussForm, omega: float, h: float, tol: float, max_terms: int):
    return _cell_terms_1d(tf.axis_factor(), uf.axis_factor(), omega, h, tol, max_terms)


def _alias_part(a0: float, a: float, b0: float, b: float) -> float:
    """(a0 + a)(b0 + b) − a0·b0 without cancellation"""
    return a0 * b + a * b0 + a * b


def _cell_terms_separable(tf: GaussForm, uf: GaussForm, omega: Tuple[float, float],
                          steps: Tuple[float, float], tol: float, max_terms: int) -> Tuple[float, ...]:
    x = _axis_terms(tf, uf, omega[0], steps[0], tol, max_terms)
    y = _axis_terms(tf, uf, omega[1], steps[1], tol, max_terms)
    t0, u0 = x[0] * y[0], x[2] * y[2]
    t_alias = _alias_part(x[0], x[1], y[0], y[1])
    u_alias = _alias_part(x[2], x[3], y[2], y[3])
    c_tu = _alias_part(x[0] * x[2], x[4], y[0] * y[2], y[4])
    c_uu = _alias_part(x[2] ** 2, x[5], y[2] ** 2, y[5])
    return t0, t_alias, u0, u_alias, c_tu, c_uu


def _cell_terms_lattice(tf: SpectralForm, uf: SpectralForm, omega: Tuple[float, float],
                        steps: Tuple[float, float], tol: float, max_terms: int) -> Tuple[float, ...]:
    w = np.array([_wrap(omega[0], steps[0]), _wrap(omega[1], steps[1])])
    inv = 1.0 / np.asarray(steps)
    area = 4.0 * steps[0] * steps[1]
    s0 = math.hypot(*w)
    t0, u0 = float(tf.density(s0)), float(uf.density(s0))
    K = 4
    while True:
        k = np.arange(-K, K + 1, dtype=float)
        kx, ky = np.meshgrid(k, k, indexing="ij")
        s = np.hypot(w[0] + kx * inv[0], w[1] + ky * inv[1])
        t, u = tf.density(s), uf.density(s)
        t[K, K] = 0.0
        u[K, K] = 0.0
        sums = (float(t.sum()), float(u.sum()), float((t * u).sum()), float((u * u).sum()))
        rho = (K - 0.5) * float(inv.min())
        gt, gu = area * tf.tail_integral(rho), area * uf.tail_integral(rho)
        ft, fu = float(tf.density(rho)), float(uf.density(rho))
        bounds = (gt, gu, min(ft * gu, fu * gt), fu * gu)
        if all(b <= tol * v + _TINY for b, v in zip(bounds, sums)):
            return t0, sums[0], u0, sums[1], sums[2], sums[3]
        K *= 2
        if (2 * K + 1) ** 2 > max_terms:
            raise NoConvergence(f"2-D alias sums did not certify tolerance {tol:g}", terms=(2 * K + 1) ** 2)


def _exact_integrand(t0: float, t_alias: float, u0: float, u_alias: float, c_tu: float, c_uu: float) -> float:
    s = u0 + u_alias
    if s <= 0.0:
        return t0 + t_alias
    # every quotient is bounded, so s near underflow stays finite
    a, b = u_alias / s, u0 / s
    value = t0 * a * a + (b * b + 1.0) * t_alias - 2.0 * (c_tu / s) + (t0 + t_alias) * (c_uu / s) / s
    if not math.isfinite(value):
        return t_alias
    return max(value, 0.0)


def _ratio_integrand(t0: float, t_alias: float, u0: float, u_alias: float, c_tu: float, c_uu: float) -> float:
    s = u0 + u_alias
    if s <= 0.0:
        return t0 + t_alias
    value = t0 * (u_alias / s) + t_alias - c_tu / s
    if not math.isfinite(value):
        return t_alias
    return max(value, 0.0)


# ---------------------------------------------------------------------------
# Error functionals
# ---------------------------------------------------------------------------

def _check_pair(true_model: CovarianceModel, used_model: CovarianceModel) -> None:
    if true_model.profile != used_model.profile:
        raise ProfileMismatch(true_model.profile.value, used_model.profile.value)


def _cell_error(true_model: CovarianceModel, used_model: CovarianceModel, design: DesignLike,
                quad: Optional[QuadratureSpec], integrand) -> float:
    _check_pair(true_model, used_model)
    design = as_design(design)
    quad = quad or QuadratureSpec()
    steps = design.steps
    dim = design.dimension
    tf = spectral_form(true_model, dim)
    uf = tf if used_model == true_model else spectral_form(used_model, dim)
    max_terms = settings.ALIAS_MAX_TERMS

    if dim == 1:
        h = steps[0]
        tol = quad.alias_tolerance
        half = 0.5 / h
        points = geometric_breakpoints({tf.scale, uf.scale}, half)
        value = 2.0 * quadrature(
            lambda w: integrand(*_cell_terms_1d(tf, uf, w, h, tol, max_terms)),
            quad, 0.0, half, breakpoints=points,
        )
    else:
        tol = max(quad.alias_tolerance, settings.ALIAS_TOLERANCE_2D)
        spec_2d = quad.model_copy(update={
            "relative_tolerance": max(quad.relative_tolerance, settings.QUAD_REL_TOL_2D),
        })
        if isinstance(tf, GaussForm) and isinstance(uf, GaussForm):
            terms = _cell_terms_separable
        else:
            terms = _cell_terms_lattice
        value = 4.0 * quadrature_2d(
            lambda wx, wy: integrand(*terms(tf, uf, (wx, wy), steps, tol, max_terms)),
            (0.0, 0.5 / steps[0]), (0.0, 0.5 / steps[1]), spec_2d,
        )
    logger.debug(f"σ² for true={true_model.label} used={used_model.label} steps={steps}: {value:.6e}")
    return value


def misspec_error(true_model: CovarianceModel, used_model: CovarianceModel, design: DesignLike,
                  quad: Optional[QuadratureSpec] = None) -> float:
    """Mean squared interpolation error of the predictor built from used_model
    when the data come from true_model; never below matched_error(true_model)"""
    return _cell_error(true_model, used_model, design, quad, _exact_integrand)


def matched_error(model: CovarianceModel, design: DesignLike, quad: Optional[QuadratureSpec] = None) -> float:
    return misspec_error(model, model, design, quad)


def aliasing_ratio_error(true_model: CovarianceModel, used_model: CovarianceModel, design: DesignLike,
                         quad: Optional[QuadratureSpec] = None) -> float:
    """∫ F_true(ω)·A_used(ω) dω, the aliasing-fraction form of the error.

    Equal to misspec_error when the models coincide; otherwise it can fall
    below the matched error, so it is not an error of any predictor.
    """
    return _cell_error(true_model, used_model, design, quad, _ratio_integrand)


def evaluate_query(query: ErrorQuery, form: str = "exact") -> float:
    evaluate = misspec_error if form == "exact" else aliasing_ratio_error
    return evaluate(query.true_model, query.used_model, query.design, query.quadrature)


def minimax_error(query: MinimaxQuery) -> float:
    """R(L) = L/(2π²)·max h_i²"""
    return query.L / (2.0 * math.pi ** 2) * max(query.steps) ** 2


def minimax_curve(L: float, steps: Iterable[float]) -> List[Tuple[float, float]]:
    return [(h, minimax_error(MinimaxQuery(L=L, steps=(h,)))) for h in steps]


def exponential_error_asymptotic(theta: float, h: float) -> float:
    """Leading term (2/3)π²θh; the same for every θ′"""
    _check_positive(theta, h)
    return 2.0 / 3.0 * math.pi ** 2 * theta * h


def se_error_bounds(theta: float, h: float) -> Tuple[float, float]:
    _check_positive(theta, h)
    core = h * math.sqrt(theta) * math.exp(-1.0 / (8.0 * h * h * theta))
    return 4.0 / 3.0 * core, 7.0 * core


# ---------------------------------------------------------------------------
# Exponential closed form
# ---------------------------------------------------------------------------

def _m(y: float) -> float:
    """1 − (1 + y)e^{-y}"""
    if y < 1e-3:
        return y * y * (0.5 - y / 3.0 + y * y / 8.0 - y ** 3 / 30.0 + y ** 4 / 144.0)
    return -math.expm1(-y) - y * math.exp(-y)


def _r(y: float) -> float:
    """(e^{-y} − 1 + y)/y²"""
    if y < 1e-3:
        return 0.5 - y / 6.0 + y * y / 24.0 - y ** 3 / 120.0 + y ** 4 / 720.0
    return (math.expm1(-y) + y) / (y * y)


def _one_minus_ratio(theta: float, theta_prime: float, a: float, eps: float) -> float:
    """1 − (θ′e^{-2aθ} − θe^{-2aθ′})/(θ′ − θ)"""
    d = theta_prime - theta
    if abs(d) < eps * max(theta, theta_prime):
        g = math.exp(-2.0 * a * theta)
        return _m(2.0 * a * theta) + 2.0 * a * a * theta * d * g - 4.0 / 3.0 * a ** 3 * theta * d * d * g
    return (4.0 * a * a * theta * theta_prime
            * (theta * _r(2.0 * a * theta) - theta_prime * _r(2.0 * a * theta_prime)) / (theta - theta_prime))


def exponential_component_integrals(theta: float, theta_prime: float, h: float) -> Tuple[float, float, float]:
    """Analytic values of the three whole-line integrals behind the closed form:
    ∫θ/(θ²+ω²), ∫θθ′/((θ²+ω²)(θ′²+ω²)), ∫θθ′·sin²(πhω)/((θ²+ω²)(θ′²+ω²))"""
    _check_positive(theta, h)
    _check_positive(theta_prime)
    cross = math.pi / (theta + theta_prime)
    weighted = 0.5 * cross * _one_minus_ratio(theta, theta_prime, math.pi * h, settings.SINGULARITY_EPS)
    return math.pi, cross, weighted


def exponential_component_quadrature(theta: float, theta_prime: float, h: float,
                                     quad: Optional[QuadratureSpec] = None) -> Tuple[float, float, float]:
    """The same three integrals by adaptive quadrature"""
    _check_positive(theta, h)
    _check_positive(theta_prime)
    quad = quad or QuadratureSpec()
    tp = theta_prime

    def density(w):
        return theta / (theta * theta + w * w)

    def cross(w):
        return theta * tp / ((theta * theta + w * w) * (tp * tp + w * w))

    def weighted(w):
        return cross(w) * math.sin(math.pi * h * w) ** 2

    mass = quadrature(density, quad)
    joint = quadrature(cross, quad)
    sin2 = quadrature(
        weighted, quad, even=True, period=1.0 / h,
        tail_bound=lambda W: 2.0 * theta * tp / (3.0 * W ** 3),
        breakpoints=geometric_breakpoints({theta, tp}, 1.0 / h),
    )
    return mass, joint, sin2


def exponential_misspec_closed(theta: float, theta_prime: float, h: float) -> float:
    """Closed form of ∫F_θ·A_θ′ for the PaperVerbatim exponential density θ/(θ²+ω²).

    Assembled from the component integrals and the coth aliased sum
    Σ_k F_θ′(ω + k/h) = πh·coth(πθ′h) / (1 + sin²(πhω)/sinh²(πθ′h)).
    Coincides with aliasing_ratio_error (PaperVerbatim) and, at θ′ = θ,
    with matched_error.
    """
    _check_positive(theta, h)
    _check_positive(theta_prime)
    _, cross, weighted = exponential_component_integrals(theta, theta_prime, h)
    x = math.pi * theta_prime * h
    inv_sinh2 = 0.0 if x > 350.0 else 1.0 / math.sinh(x) ** 2
    bracket = cross + weighted * inv_sinh2
    return math.pi - math.tanh(x) / (math.pi * h) * bracket


def theory_value(true_model: CovarianceModel, used_model: CovarianceModel, design: DesignLike,
                 quad: Optional[QuadratureSpec] = None) -> float:
    """Theory column for an experiment cell: matched or misspecified error"""
    if true_model == used_model:
        return matched_error(true_model, design, quad)
    return misspec_error(true_model, used_model, design, quad)
