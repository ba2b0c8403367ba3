"""Resolution metrology: PSF spread, two-point dip/peak ratio, minimum resolvable distance.

Two points at x_o = +-d/2 image to the profile

    G(x_c) = exp(-g (x_c/M_s - d/(2 M_I))^2) + exp(-g (x_c/M_s + d/(2 M_I))^2),
    g = 4 pi / (L (ls + li)).

In the scaled coordinate v = 2 M_I x_c / (M_s d) this is
exp(-s (v-1)^2) + exp(-s (v+1)^2) with s = pi d^2 / (L (ls+li) M_I^2), so
the dip/peak ratio depends on s alone. The two humps merge for s <= 1/2.
Two points are just resolved when the ratio reaches ``beta_max``; the
cross-value of one point's image at the other's centre is then exp(-m0)
with m0 = 4 s.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import BracketError, InvalidParameterError, MalformedProfileError
from .imaging import OpticsParams, SceneObject, evaluate_image, point_pair
from .kernel import SpdcParams

DEFAULT_BETA_MAX = 0.81
MERGE_S = 0.5
FARFIELD_COEFFICIENT = 0.42


def psf_spread(p: SpdcParams, m_s: float) -> float:
    """Camera-plane radius at which the PSF falls to 1/e."""
    return abs(m_s) / (2.0 * math.sqrt(math.pi)) * math.sqrt(p.crystal_length * p.wavelength_sum)


def psf_spread_object_plane(p: SpdcParams, m_i: float) -> float:
    """PSF spread referred back to the object plane (spread / M)."""
    return abs(m_i) / (2.0 * math.sqrt(math.pi)) * math.sqrt(p.crystal_length * p.wavelength_sum)


def psf(p: SpdcParams, m_s: float, rho_c):
    """Peak-normalized point spread function at camera positions (..., 2)."""
    r2 = np.sum(np.asarray(rho_c, float) ** 2, axis=-1)
    return np.exp(-4.0 * math.pi * r2 / (m_s**2 * p.crystal_length * p.wavelength_sum))


def separation_parameter(p: SpdcParams, m_i: float, d: float) -> float:
    """Dimensionless overlap parameter s = pi d^2 / (L (ls+li) M_I^2)."""
    return math.pi * d * d / (p.crystal_length * p.wavelength_sum * m_i * m_i)


# -- dimensionless two-Gaussian model ------------------------------------------


def _peak_gap(s: float) -> float:
    """Distance 1 - v* of the true peak v* from the isolated-Gaussian centre.

    The stationarity condition of exp(-s(v-1)^2) + exp(-s(v+1)^2) for v > 0 is
    atanh(v)/v = 2 s. It is solved for u = -ln(1 - v), which stays well
    conditioned when the peak sits within rounding distance of v = 1.
    """

    def f(u):
        w = -math.expm1(-u)  # = v
        return 0.5 * (math.log1p(w) + u) / w - 2.0 * s

    u = optimize.brentq(f, 1e-12, 4.0 * s + 50.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return math.exp(-u)


def beta_of_s(s: float) -> float:
    """Dip/peak ratio of the dimensionless two-Gaussian profile (1 when merged)."""
    if s <= MERGE_S:
        return 1.0
    w = _peak_gap(s)
    return 2.0 * math.exp(-s) / (math.exp(-s * w * w) + math.exp(-s * (2.0 - w) ** 2))


def m0_from_betamax(beta_max: float) -> float:
    """Resolvability exponent m0 = 4 s for which the dip/peak ratio equals ``beta_max``.

    beta is strictly decreasing in s above the merge point, so the crossing
    is found by bisection to 1e-10 in s.
    """
    if not (0.0 < beta_max < 1.0):
        raise InvalidParameterError(f"beta_max must lie in (0, 1), got {beta_max!r}")
    hi = 1.0
    while beta_of_s(hi) > beta_max:
        hi *= 2.0
    s = optimize.bisect(lambda s: beta_of_s(s) - beta_max, MERGE_S, hi, xtol=1e-10)
    return 4.0 * s


@dataclass(frozen=True)
class ResolutionCriterion:
    """Dip/peak threshold and its equivalent exponent form.

    Build with :meth:`from_beta_max`; direct construction checks consistency.
    """

    beta_max: float
    m0: float
    n: float

    def __post_init__(self):
        if not (0.0 < self.beta_max < 1.0):
            raise InvalidParameterError(f"beta_max must lie in (0, 1), got {self.beta_max!r}")
        if not math.isclose(self.n, math.sqrt(self.m0 / (4.0 * math.pi)), rel_tol=1e-12):
            raise InvalidParameterError("n must equal sqrt(m0 / (4 pi))")
        if not math.isclose(self.m0, m0_from_betamax(self.beta_max), rel_tol=1e-8):
            raise InvalidParameterError(f"m0={self.m0} does not correspond to beta_max={self.beta_max}")

    @classmethod
    def from_beta_max(cls, beta_max: float = DEFAULT_BETA_MAX) -> "ResolutionCriterion":
        m0 = m0_from_betamax(beta_max)
        return cls(beta_max, m0, math.sqrt(m0 / (4.0 * math.pi)))


@functools.lru_cache(maxsize=None)
def default_criterion() -> ResolutionCriterion:
    return ResolutionCriterion.from_beta_max(DEFAULT_BETA_MAX)


# -- sampled profiles ------------------------------------------------------------


@dataclass(frozen=True)
class TwoPointProfile:
    """Cut G(x_c, 0) through the image of a symmetric object pair.

    ``evaluate``, when present, returns G at arbitrary x_c and is used to
    refine the peak beyond the sampling pitch.
    """

    x: np.ndarray
    values: np.ndarray
    separation: float
    spdc: SpdcParams
    optics: OpticsParams
    evaluate: Optional[Callable[[np.ndarray], np.ndarray]] = None


def profile_axis(p: SpdcParams, o: OpticsParams, d: float, samples_per_spread: int = 64, margin: float = 4.0):
    """Odd-length grid symmetric about 0 covering both humps plus ``margin`` spreads."""
    spread = psf_spread(p, o.m_s)
    half = abs(o.magnification) * d / 2.0 + margin * spread
    n_half = int(math.ceil(half / spread * samples_per_spread))
    return np.arange(-n_half, n_half + 1) * (half / n_half)


def two_point_profile(
    p: SpdcParams, o: OpticsParams, d: float, x: Optional[np.ndarray] = None
) -> TwoPointProfile:
    """Closed-form profile of two unit points at (+-d/2, 0)."""
    if d < 0:
        raise InvalidParameterError("separation must be non-negative")
    g = p.correlation_rate
    shift = d / (2.0 * o.m_i)

    def evaluate(xc):
        xs = np.asarray(xc, float) / o.m_s
        return np.exp(-g * (xs - shift) ** 2) + np.exp(-g * (xs + shift) ** 2)

    if x is None:
        x = profile_axis(p, o, d)
    x = np.asarray(x, float)
    return TwoPointProfile(x, evaluate(x), d, p, o, evaluate)


def object_profile(
    p: SpdcParams,
    o: OpticsParams,
    obj: SceneObject,
    d: float,
    kernel: str = "reduced",
    x: Optional[np.ndarray] = None,
) -> TwoPointProfile:
    """Profile of an arbitrary symmetric pair object through the imaging engine."""

    def evaluate(xc):
        xc = np.atleast_1d(np.asarray(xc, float))
        return evaluate_image(p, o, obj, xc, [0.0], kernel)[0]

    if x is None:
        x = profile_axis(p, o, d)
    x = np.asarray(x, float)
    return TwoPointProfile(x, evaluate(x), d, p, o, evaluate)


def _parabolic_peak(x, y, k):
    x0, x1, x2 = x[k - 1 : k + 2]
    y0, y1, y2 = y[k - 1 : k + 2]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return y1
    t = 0.5 * (y0 - y2) / denom
    return y1 - 0.25 * (y0 - y2) * t


def beta(profile: TwoPointProfile, symmetry_rtol: float = 1e-6, xrtol: float = 1e-6) -> float:
    """Dip/peak ratio G(0)/G(peak) of a symmetric double-humped profile.

    Returns exactly 1 when the profile has no interior minimum at the centre.

    Raises:
        MalformedProfileError: if the samples are not symmetric about x_c = 0.
    """
    x = np.asarray(profile.x, float)
    y = np.asarray(profile.values, float)
    if x.size < 3 or x.size % 2 == 0:
        raise MalformedProfileError("profile needs an odd number (>= 3) of samples centred on 0")
    scale = float(np.max(np.abs(y)))
    if scale <= 0:
        raise MalformedProfileError("profile is identically zero")
    if not np.allclose(x, -x[::-1], rtol=0, atol=1e-12 * np.max(np.abs(x))):
        raise MalformedProfileError("sample positions are not symmetric about x_c = 0")
    asym = float(np.max(np.abs(y - y[::-1]))) / scale
    if asym > symmetry_rtol:
        raise MalformedProfileError(f"profile asymmetry {asym:.3g} exceeds {symmetry_rtol:.3g}")

    mid = x.size // 2
    dip = float(profile.evaluate(np.array([0.0]))[0]) if profile.evaluate else float(y[mid])
    right = y[mid:]
    k = int(np.argmax(right))
    if k == 0 or right[k] <= dip:
        return 1.0
    if k == right.size - 1:
        raise MalformedProfileError("profile peak lies at the edge of the sampled window")
    xr = x[mid:]
    if profile.evaluate is not None:
        res = optimize.minimize_scalar(
            lambda t: -float(profile.evaluate(np.array([t]))[0]),
            bounds=(xr[k - 1], xr[k + 1]),
            method="bounded",
            options={"xatol": xrtol * abs(xr[k])},
        )
        peak = max(-float(res.fun), float(right[k]))
    else:
        peak = _parabolic_peak(xr, right, k)
    return min(dip / peak, 1.0)


# -- minimum resolvable distance -----------------------------------------------


def d_min_analytic(p: SpdcParams, m_i: float, crit: Optional[ResolutionCriterion] = None) -> float:
    """Minimum resolvable object-plane separation n |M_I| sqrt(L (ls + li))."""
    crit = crit or default_criterion()
    return crit.n * abs(m_i) * math.sqrt(p.crystal_length * p.wavelength_sum)


def d_min_numeric(
    p: SpdcParams,
    o: OpticsParams,
    template: Callable[[float], SceneObject] = point_pair,
    crit: Optional[ResolutionCriterion] = None,
    kernel: str = "reduced",
    rtol: float = 1e-4,
    bracket: tuple = (0.2, 5.0),
) -> float:
    """Separation at which the simulated image of ``template(d)`` has beta = beta_max.

    beta(d) is computed from image-function cuts and the crossing is found by
    bisection over ``bracket`` times the analytic distance.

    Raises:
        BracketError: if beta does not cross beta_max inside the bracket.
    """
    crit = crit or default_criterion()
    d0 = d_min_analytic(p, o.m_i, crit)
    lo, hi = bracket[0] * d0, bracket[1] * d0

    def excess(d):
        return beta(object_profile(p, o, template(d), d, kernel)) - crit.beta_max

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo < 0 or f_hi > 0:
        raise BracketError(
            f"beta does not cross {crit.beta_max} on [{lo:.4g}, {hi:.4g}] m: "
            f"beta ranges {f_hi + crit.beta_max:.4g} .. {f_lo + crit.beta_max:.4g}"
        )
    return optimize.bisect(excess, lo, hi, xtol=rtol * d0)


def d_min_farfield(f_i: float, lambda_i: float, w_p: float) -> float:
    """Far-field (momentum-correlation) minimum resolvable distance 0.42 f_I li / w_p."""
    for name, value in (("f_i", f_i), ("lambda_i", lambda_i), ("w_p", w_p)):
        if not (math.isfinite(value) and value > 0):
            raise InvalidParameterError(f"{name} must be positive, got {value!r}")
    return FARFIELD_COEFFICIENT * f_i * lambda_i / w_p
