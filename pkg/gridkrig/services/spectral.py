"""
Spectral service
协方差族、谱密度与网格混叠和

Frequencies are ordinary frequencies and aliases sit at ω + k/h under both
profiles. PaperVerbatim keeps the unnormalized legacy forms
(Exponential F = θ/(θ²+ω²), R = √(π/2)·e^{-θ|x|}; SquaredExponential
F = θ^{-1/2}·e^{-ω²/(2θ)}, R its inverse transform). Consistent uses unit
variance covariances with inverse length-scale θ and F(ν) = ∫R(x)e^{-2πiνx}dx.
Matérn families are only defined under the Consistent convention and use it
under both profiles.
"""

import logging
import math
from functools import lru_cache
from typing import Sequence, Tuple, Union

import numpy as np
from scipy import special

from gridkrig.core.config import settings
from gridkrig.core.exceptions import (
    ClosedFormUnavailable, NoConvergence, NonPositiveTheta, UnknownFamily,
    UnknownProfile, UnsupportedDimension,
)
from gridkrig.schemas.spectral import (
    MATERN_NU, CovarianceFamily, CovarianceModel, Profile, SumMode,
)

logger = logging.getLogger(__name__)

Frequency = Union[float, Sequence[float]]
Steps = Union[float, Sequence[float]]

_TINY = np.finfo(float).tiny


class SpectralForm:
    """Radial spectral density F(|s|) on R^dimension"""

    dimension: int = 1
    scale: float = 1.0
    convex_from: float = 0.0

    def density(self, s):
        raise NotImplementedError

    def derivative(self, s):
        raise NotImplementedError

    def second_derivative(self, s):
        raise NotImplementedError

    def tail_integral(self, r: float) -> float:
        """1-D: ∫_r^∞ F(s) ds.  2-D: ∫_{|u|>r} F(u) du."""
        raise NotImplementedError

    @property
    def mass(self) -> float:
        raise NotImplementedError

    def has_closed_alias_sum(self) -> bool:
        return False


class LorentzForm(SpectralForm):
    """F(s) = c·(b² + s²)^(-p); Matérn spectra and the PaperVerbatim exponential density"""

    def __init__(self, c: float, b: float, p: float, dimension: int = 1):
        self.c = c
        self.b = b
        self.p = p
        self.dimension = dimension
        self.scale = b
        self.convex_from = 2.0 * b

    def density(self, s):
        s = np.asarray(s, dtype=float)
        return self.c * (self.b * self.b + s * s) ** (-self.p)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        return -2.0 * self.p * self.c * s * (self.b * self.b + s * s) ** (-self.p - 1.0)

    def second_derivative(self, s):
        s = np.asarray(s, dtype=float)
        q = self.b * self.b + s * s
        return 2.0 * self.p * self.c * q ** (-self.p - 2.0) * ((2.0 * self.p + 1.0) * s * s - self.b * self.b)

    def tail_integral(self, r: float) -> float:
        b, p = self.b, self.p
        if self.dimension == 2:
            return math.pi * self.c * (b * b + r * r) ** (1.0 - p) / (p - 1.0)
        if r > 4.0 * b:
            # ∫_r^∞ s^{-2p}(1 + b²/s²)^{-p} ds expanded in (b/r)²
            total, coef, ratio = 0.0, 1.0, (b / r) ** 2
            for j in range(40):
                term = coef * ratio ** j / (2.0 * p + 2.0 * j - 1.0)
                total += term
                if abs(term) < 1e-17 * abs(total):
                    break
                coef *= -(p + j) / (j + 1.0)
            return self.c * total * r ** (1.0 - 2.0 * p)
        value = math.atan2(b, r) / b
        order = 1
        while order < p:
            order += 1
            value = (-r / (2.0 * b * b * (order - 1) * (b * b + r * r) ** (order - 1))
                     + (2.0 * order - 3.0) / (2.0 * b * b * (order - 1)) * value)
        return self.c * value

    @property
    def mass(self) -> float:
        b, p = self.b, self.p
        if self.dimension == 2:
            return math.pi * self.c * b ** (2.0 - 2.0 * p) / (p - 1.0)
        return self.c * math.sqrt(math.pi) * special.gamma(p - 0.5) / (special.gamma(p) * b ** (2.0 * p - 1.0))

    def has_closed_alias_sum(self) -> bool:
        return self.dimension == 1 and self.p == 1

    def closed_alias_sum(self, omega, h: float):
        """Σ_k F(ω + k/h) = (c/b)·πh·coth(πbh) / (1 + sin²(πhω)·(coth²(πbh) − 1))"""
        x = math.pi * self.b * h
        inv_sinh2 = 0.0 if x > 350.0 else 1.0 / math.sinh(x) ** 2
        sin2 = np.sin(math.pi * h * np.asarray(omega, dtype=float)) ** 2
        return (self.c / self.b) * math.pi * h / math.tanh(x) / (1.0 + sin2 * inv_sinh2)


class GaussForm(SpectralForm):
    """F(s) = c·exp(-s²/(2v))"""

    def __init__(self, c: float, v: float, dimension: int = 1):
        self.c = c
        self.v = v
        self.dimension = dimension
        self.scale = math.sqrt(v)
        self.convex_from = math.sqrt(3.0 * v)

    def density(self, s):
        s = np.asarray(s, dtype=float)
        return self.c * np.exp(-s * s / (2.0 * self.v))

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        return -(s / self.v) * self.density(s)

    def second_derivative(self, s):
        s = np.asarray(s, dtype=float)
        return (s * s / (self.v * self.v) - 1.0 / self.v) * self.density(s)

    def tail_integral(self, r: float) -> float:
        if self.dimension == 2:
            return 2.0 * math.pi * self.c * self.v * math.exp(-r * r / (2.0 * self.v))
        return self.c * math.sqrt(math.pi * self.v / 2.0) * special.erfc(r / math.sqrt(2.0 * self.v))

    @property
    def mass(self) -> float:
        return self.c * (2.0 * math.pi * self.v) ** (self.dimension / 2.0)

    def axis_factor(self) -> "GaussForm":
        """One-axis factor of a separable 2-D Gaussian density"""
        return GaussForm(self.c ** (1.0 / self.dimension), self.v, dimension=1)


def _matern_form(nu: float, theta: float, dimension: int) -> LorentzForm:
    a = math.sqrt(2.0 * nu) * theta
    p = nu + dimension / 2.0
    const = 2.0 ** dimension * math.pi ** (dimension / 2.0) * special.gamma(p) / special.gamma(nu)
    c = const * a ** (2.0 * nu) * (4.0 * math.pi ** 2) ** (-p)
    return LorentzForm(c=c, b=a / (2.0 * math.pi), p=p, dimension=dimension)


@lru_cache(maxsize=256)
def _cached_form(family: CovarianceFamily, theta: float, profile: Profile, dimension: int) -> SpectralForm:
    if dimension not in (1, 2):
        raise UnsupportedDimension(dimension)
    if profile == Profile.PAPER_VERBATIM:
        if family == CovarianceFamily.EXPONENTIAL:
            if dimension != 1:
                raise UnsupportedDimension(dimension)
            return LorentzForm(c=theta, b=theta, p=1, dimension=1)
        if family == CovarianceFamily.SQUARED_EXPONENTIAL:
            return GaussForm(c=theta ** (-dimension / 2.0), v=theta, dimension=dimension)
    if family == CovarianceFamily.SQUARED_EXPONENTIAL:
        c = (math.sqrt(2.0 * math.pi) / theta) ** dimension
        return GaussForm(c=c, v=theta * theta / (4.0 * math.pi ** 2), dimension=dimension)
    return _matern_form(MATERN_NU[family], theta, dimension)


def spectral_form(model: CovarianceModel, dimension: int = 1) -> SpectralForm:
    return _cached_form(model.family, model.theta, model.profile, dimension)


def make_model(family, theta: float, profile=Profile.CONSISTENT) -> CovarianceModel:
    """Build a validated covariance model"""
    try:
        family = CovarianceFamily(family)
    except ValueError:
        raise UnknownFamily(family) from None
    try:
        profile = Profile(profile)
    except ValueError:
        raise UnknownProfile(profile) from None
    theta = float(theta)
    if not (theta > 0) or not math.isfinite(theta):
        raise NonPositiveTheta(theta)
    return CovarianceModel(family=family, theta=theta, profile=profile)


def covariance(model: CovarianceModel, r):
    """R(|r|), vectorized"""
    r = np.abs(np.asarray(r, dtype=float))
    theta = model.theta
    family = model.family
    if model.profile == Profile.PAPER_VERBATIM:
        if family == CovarianceFamily.EXPONENTIAL:
            return math.sqrt(math.pi / 2.0) * np.exp(-theta * r)
        if family == CovarianceFamily.SQUARED_EXPONENTIAL:
            return math.sqrt(2.0 * math.pi) * np.exp(-2.0 * math.pi ** 2 * theta * r * r)
    if family == CovarianceFamily.EXPONENTIAL:
        return np.exp(-theta * r)
    if family == CovarianceFamily.MATERN32:
        z = math.sqrt(3.0) * theta * r
        return (1.0 + z) * np.exp(-z)
    if family == CovarianceFamily.MATERN52:
        z = math.sqrt(5.0) * theta * r
        return (1.0 + z + z * z / 3.0) * np.exp(-z)
    return np.exp(-0.5 * (theta * r) ** 2)


def spectral_density(model: CovarianceModel, omega, dimension: int = 1):
    """F(|ω|); for dimension 2 omega is the radial frequency"""
    return spectral_form(model, dimension).density(np.abs(np.asarray(omega, dtype=float)))


def _wrap(omega: float, h: float) -> float:
    """Fold ω into [-1/(2h), 1/(2h)]"""
    return omega - round(omega * h) / h


def _as_pair(omega: Frequency, h: Steps) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    omegas = tuple(float(w) for w in np.atleast_1d(omega))
    steps = tuple(float(s) for s in np.atleast_1d(h))
    if len(steps) == 1 and len(omegas) > 1:
        steps = steps * len(omegas)
    if len(omegas) != len(steps):
        raise UnsupportedDimension(len(omegas))
    if len(steps) not in (1, 2):
        raise UnsupportedDimension(len(steps))
    if any(not (s > 0) for s in steps):
        raise ValueError("grid steps must be positive")
    return omegas, steps


def _truncated_components_1d(form: SpectralForm, omega: float, h: float, tol: float,
                             max_terms: int) -> Tuple[float, float]:
    """Base term and Σ_{k≠0} F(ω + k/h).

    Partial sum over |k| <= K plus the tail integral from K + 1/2 on each side;
    the midpoint-rule remainder of that tail is bounded from F' and F''.
    """
    w = _wrap(omega, h)
    base = float(form.density(abs(w)))
    K = 16
    while True:
        k = np.arange(1, K + 1, dtype=float)
        partial = float(np.sum(form.density(w + k / h)) + np.sum(form.density(k / h - w)))
        edges = (w + (K + 0.5) / h, (K + 0.5) / h - w)
        tail = h * sum(form.tail_integral(e) for e in edges)
        remainder = sum(
            (abs(float(form.second_derivative(e))) / (h * h) + abs(float(form.derivative(e))) / h) / 24.0
            for e in edges
        )
        aliases = partial + tail
        if min(edges) - 0.5 / h >= form.convex_from and remainder <= tol * (base + aliases) + _TINY:
            logger.debug(f"Truncated aliased sum converged with K={K}")
            return base, aliases
        K *= 2
        if 2 * K > max_terms:
            raise NoConvergence(f"aliased sum did not certify tolerance {tol:g} within {max_terms} terms", terms=2 * K)


def _lattice_components_2d(form: SpectralForm, omega: Tuple[float, float], steps: Tuple[float, float],
                           tol: float, max_terms: int) -> Tuple[float, float]:
    """Double truncation over k ∈ [-K, K]² with a radial tail bound"""
    w = np.array([_wrap(omega[0], steps[0]), _wrap(omega[1], steps[1])])
    inv = 1.0 / np.asarray(steps)
    base = float(form.density(math.hypot(*w)))
    K = 4
    while True:
        k = np.arange(-K, K + 1, dtype=float)
        kx, ky = np.meshgrid(k, k, indexing="ij")
        s = np.hypot(w[0] + kx * inv[0], w[1] + ky * inv[1])
        values = form.density(s)
        values[K, K] = 0.0
        partial = float(values.sum())
        rho = (K - 0.5) * float(inv.min())
        bound = 4.0 * steps[0] * steps[1] * form.tail_integral(rho)
        if bound <= tol * (base + partial) + _TINY:
            return base, partial
        K *= 2
        if (2 * K + 1) ** 2 > max_terms:
            raise NoConvergence(f"2-D aliased sum did not certify tolerance {tol:g}", terms=(2 * K + 1) ** 2)


def alias_components(form: SpectralForm, omega: Frequency, h: Steps, tol: float = None,
                     closed: bool = True, max_terms: int = None) -> Tuple[float, float]:
    """(F(ω), Σ_{k≠0} F(ω + k/h)) for 1-D or 2-D grids"""
    tol = settings.ALIAS_TOLERANCE if tol is None else tol
    max_terms = settings.ALIAS_MAX_TERMS if max_terms is None else max_terms
    omegas, steps = _as_pair(omega, h)
    if len(steps) == 1:
        if closed and form.has_closed_alias_sum():
            base = float(form.density(abs(omegas[0])))
            total = float(form.closed_alias_sum(omegas[0], steps[0]))
            return base, max(total - base, 0.0)
        return _truncated_components_1d(form, omegas[0], steps[0], tol, max_terms)
    if isinstance(form, GaussForm):
        axis = form.axis_factor()
        parts = [_truncated_components_1d(axis, w, s, tol, max_terms) for w, s in zip(omegas, steps)]
        base = parts[0][0] * parts[1][0]
        total = (parts[0][0] + parts[0][1]) * (parts[1][0] + parts[1][1])
        return base, max(total - base, 0.0)
    return _lattice_components_2d(form, omegas, steps, tol, max_terms)


def aliased_sum(model: CovarianceModel, omega: Frequency, h: Steps, mode: SumMode = SumMode.TRUNCATED,
                tolerance: float = None) -> float:
    """Σ_k F(ω + k/h); periodic in ω with period 1/h"""
    omegas, steps = _as_pair(omega, h)
    form = spectral_form(model, len(steps))
    if SumMode(mode) == SumMode.CLOSED_FORM:
        if not form.has_closed_alias_sum():
            raise ClosedFormUnavailable(model.family.value)
        return float(form.closed_alias_sum(omegas[0], steps[0]))
    base, aliases = alias_components(form, omegas, steps, tol=tolerance, closed=False)
    return base + aliases


def aliasing_fraction(true_model: CovarianceModel, used_model: CovarianceModel, omega: Frequency,
                      h: Steps, mode: SumMode = SumMode.TRUNCATED, tolerance: float = None) -> float:
    """A(ω) = Σ_{k≠0} F_used(ω + k/h) / Σ_k F_used(ω + k/h); true_model is not consulted"""
    omegas, steps = _as_pair(omega, h)
    form = spectral_form(used_model, len(steps))
    closed = SumMode(mode) == SumMode.CLOSED_FORM
    if closed and not form.has_closed_alias_sum():
        raise ClosedFormUnavailable(used_model.family.value)
    base, aliases = alias_components(form, omegas, steps, tol=tolerance, closed=closed)
    total = base + aliases
    if total <= 0.0:
        return 0.0
    return min(aliases / total, 1.0)
