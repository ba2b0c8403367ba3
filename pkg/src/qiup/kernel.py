"""Biphoton joint position density of a Gaussian-pumped SPDC source.

Three forms of the density are provided:

* ``joint_density_full``: normalized Gaussian density including the pump
  (momentum anti-correlation) envelope.
* ``joint_density_reduced``: the correlation factor alone, treated as an
  unnormalized weight with unit peak.
* ``joint_density_bruteforce``: direct Fourier summation of the Gaussian
  two-photon amplitude over a momentum grid. It is independent of the
  closed forms and is used as their oracle.

All lengths are SI meters; transverse wavevectors are in 1/m. Position
arguments are array-likes whose last axis holds ``(x, y)``; leading axes
broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GridResolutionError, InvalidParameterError

#: Largest ``reduced_kernel_validity`` ratio for which the pump envelope is
#: considered flat over one correlation width.
VALIDITY_THRESHOLD = 0.1


class TransversePoint(NamedTuple):
    """A point in a transverse plane, in meters."""

    x: float
    y: float


def _check_positive(**values):
    for name, value in values.items():
        if not (np.isfinite(value) and value > 0):
            raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")


def pump_wavelength(lambda_s: float, lambda_i: float) -> float:
    """Pump wavelength fixed by energy conservation, ``ls*li/(ls+li)``."""
    _check_positive(lambda_s=lambda_s, lambda_i=lambda_i)
    return lambda_s * lambda_i / (lambda_s + lambda_i)


@dataclass(frozen=True)
class SpdcParams:
    """Source parameters of a single SPDC crystal.

    Attributes:
        lambda_s: Signal (detected) wavelength in m.
        lambda_i: Idler (undetected) wavelength in m.
        crystal_length: Crystal length L in m.
        pump_waist: Gaussian pump waist w_p in m.
    """

    lambda_s: float
    lambda_i: float
    crystal_length: float
    pump_waist: float

    def __post_init__(self):
        _check_positive(
            lambda_s=self.lambda_s,
            lambda_i=self.lambda_i,
            crystal_length=self.crystal_length,
            pump_waist=self.pump_waist,
        )

    @property
    def wavelength_sum(self) -> float:
        return self.lambda_s + self.lambda_i

    @property
    def pump_wavelength(self) -> float:
        return pump_wavelength(self.lambda_s, self.lambda_i)

    @property
    def norm_full(self) -> float:
        """Normalization constant of the full density, in 1/m^4."""
        return 8.0 / (math.pi * self.crystal_length * self.pump_waist**2 * self.wavelength_sum)

    @property
    def correlation_width(self) -> float:
        """Separation |rho_s - rho_i| at which the correlation factor is 1/e."""
        return math.sqrt(self.crystal_length * self.wavelength_sum / (4.0 * math.pi))

    @property
    def correlation_rate(self) -> float:
        """Coefficient of |rho_s - rho_i|^2 in the correlation exponent."""
        return 4.0 * math.pi / (self.crystal_length * self.wavelength_sum)

    @property
    def pump_rate(self) -> float:
        """Coefficient of |li*rho_s + ls*rho_i|^2 in the pump exponent."""
        return 2.0 / (self.pump_waist**2 * self.wavelength_sum**2)

    def swapped(self) -> "SpdcParams":
        """Same source with signal and idler wavelengths exchanged."""
        return SpdcParams(self.lambda_i, self.lambda_s, self.crystal_length, self.pump_waist)


def _sqnorm(v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1:] != (2,):
        raise ValueError(f"transverse vectors need a trailing axis of length 2, got shape {v.shape}")
    return np.sum(v * v, axis=-1)


def pump_term(p: SpdcParams, rho_s, rho_i):
    """Pump envelope factor, a function of ``li*rho_s + ls*rho_i`` only."""
    combo = p.lambda_i * np.asarray(rho_s, float) + p.lambda_s * np.asarray(rho_i, float)
    return np.exp(-p.pump_rate * _sqnorm(combo))


def correlation_term(p: SpdcParams, rho_s, rho_i):
    """Position-correlation factor, a function of ``rho_s - rho_i`` only."""
    diff = np.asarray(rho_s, float) - np.asarray(rho_i, float)
    return np.exp(-p.correlation_rate * _sqnorm(diff))


def joint_density_full(p: SpdcParams, rho_s, rho_i):
    """Normalized joint probability density P(rho_s, rho_i) in 1/m^4."""
    return p.norm_full * pump_term(p, rho_s, rho_i) * correlation_term(p, rho_s, rho_i)


def joint_density_reduced(p: SpdcParams, rho_s, rho_i):
    """Correlation-only kernel with unit peak (pump envelope taken as constant)."""
    return correlation_term(p, rho_s, rho_i)


def reduced_kernel_validity(p: SpdcParams) -> float:
    """Ratio of the correlation width to the pump-envelope width.

    The pump envelope, seen as a function of one photon's position, has a
    1/e half-width of ``w_p*(ls+li)/(sqrt(2)*max(ls, li))``. Small ratios
    mean the envelope is flat across the correlation kernel and the reduced
    density can replace the full one. Compare against ``VALIDITY_THRESHOLD``.
    """
    pump_width = p.pump_waist * p.wavelength_sum / (math.sqrt(2.0) * max(p.lambda_s, p.lambda_i))
    return p.correlation_width / pump_width


# -- momentum-space amplitude --------------------------------------------------


def phase_matching_argument(p: SpdcParams, q_s, q_i):
    """Argument ``(L lp ls / (8 pi li)) |q_s - (li/ls) q_i|^2`` of the phase-matching function."""
    coeff = p.crystal_length * p.pump_wavelength * p.lambda_s / (8.0 * math.pi * p.lambda_i)
    mismatch = np.asarray(q_s, float) - (p.lambda_i / p.lambda_s) * np.asarray(q_i, float)
    return coeff * _sqnorm(mismatch)


def phase_matching_sinc(p: SpdcParams, q_s, q_i):
    """Exact phase-matching function sinc(arg) with sinc(x) = sin(x)/x."""
    arg = phase_matching_argument(p, q_s, q_i)
    # np.sinc is sin(pi x)/(pi x)
    return np.sinc(arg / math.pi)


def phase_matching_gaussian(p: SpdcParams, q_s, q_i):
    """Gaussian surrogate exp(-arg) used in place of the sinc."""
    return np.exp(-phase_matching_argument(p, q_s, q_i))


def pump_spectrum(p: SpdcParams, q_s, q_i):
    """Gaussian pump angular spectrum exp(-|q_s + q_i|^2 w_p^2 / 4)."""
    total = np.asarray(q_s, float) + np.asarray(q_i, float)
    return np.exp(-0.25 * p.pump_waist**2 * _sqnorm(total))


def amplitude_c(p: SpdcParams, q_s, q_i):
    """Unnormalized two-photon amplitude C(q_s, q_i) in the Gaussian approximation."""
    return pump_spectrum(p, q_s, q_i) * phase_matching_gaussian(p, q_s, q_i)


def sinc_gaussian_discrepancy(arguments):
    """Pointwise |sinc(x) - exp(-x)| for phase-matching arguments x >= 0."""
    x = np.asarray(arguments, float)
    return np.abs(np.sinc(x / math.pi) - np.exp(-x))


# -- brute-force oracle --------------------------------------------------------


@dataclass(frozen=True)
class MomentumGrid:
    """Symmetric per-axis momentum grid ``linspace(-extent, extent, count)``.

    The same grid is used for the signal and idler wavevector along each
    Cartesian axis.
    """

    extent: float
    count: int

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.count)

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / (self.count - 1)


def _axis_quadratic_form(p: SpdcParams) -> np.ndarray:
    """Matrix H with |C|_axis = exp(-[qs, qi] H [qs, qi]^T) along one Cartesian axis."""
    w2 = 0.25 * p.pump_waist**2
    kappa = p.crystal_length * p.pump_wavelength * p.lambda_s / (8.0 * math.pi * p.lambda_i)
    r = p.lambda_i / p.lambda_s
    return np.array([[w2 + kappa, w2 - kappa * r], [w2 - kappa * r, w2 + kappa * r * r]])


def amplitude_widths(p: SpdcParams) -> tuple[float, float]:
    """(largest marginal, smallest conditional) standard width of |C| along one axis.

    |C| is read as the Gaussian weight exp(-q^T H q), whose covariance is
    (2H)^-1.
    """
    h = _axis_quadratic_form(p)
    cov = np.linalg.inv(2.0 * h)
    marginal = float(np.sqrt(np.max(np.diag(cov))))
    conditional = float(np.min(1.0 / np.sqrt(2.0 * np.diag(h))))
    return marginal, conditional


def required_momentum_grid(p: SpdcParams, max_offset: float = 0.0, widths: float = 6.0) -> MomentumGrid:
    """Smallest grid passing the checks of ``joint_density_bruteforce``.

    Args:
        p: Source parameters.
        max_offset: Largest |coordinate| of any probe position, in m.
        widths: Grid half-extent in marginal standard widths (at least 4).
    """
    marginal, conditional = amplitude_widths(p)
    extent = max(widths, 4.0) * marginal
    spacing = conditional / 2.0
    if max_offset > 0:
        spacing = min(spacing, math.pi / (2.0 * max_offset))
    count = max(32, int(math.ceil(2.0 * extent / spacing)) + 1)
    return MomentumGrid(extent, count)


def _check_grid(p: SpdcParams, grid: MomentumGrid, max_offset: float):
    marginal, conditional = amplitude_widths(p)
    needed = required_momentum_grid(p, max_offset, widths=4.0)
    if grid.count < 32:
        raise GridResolutionError(
            f"momentum grid needs at least 32 points per axis, got {grid.count}",
            required_extent=needed.extent,
            required_count=needed.count,
        )
    if grid.extent < 4.0 * marginal:
        raise GridResolutionError(
            f"momentum grid extent {grid.extent:.4g} 1/m is below 4 amplitude widths; "
            f"need at least {4.0 * marginal:.4g} 1/m",
            required_extent=4.0 * marginal,
            required_count=needed.count,
        )
    spacing_limit = conditional / 2.0
    if max_offset > 0:
        spacing_limit = min(spacing_limit, math.pi / (2.0 * max_offset))
    if grid.spacing > spacing_limit:
        count = int(math.ceil(2.0 * grid.extent / spacing_limit)) + 1
        raise GridResolutionError(
            f"momentum spacing {grid.spacing:.4g} 1/m exceeds {spacing_limit:.4g} 1/m; "
            f"use at least {count} points over extent {grid.extent:.4g} 1/m",
            required_extent=grid.extent,
            required_count=count,
        )


def joint_density_bruteforce(p: SpdcParams, rho_s, rho_i, grid: MomentumGrid | None = None):
    """|sum_q C(q_s, q_i) exp(i(q_s.rho_s + q_i.rho_i))|^2 by direct summation.

    C factorizes over the x and y axes, so the double sum over (q_s, q_i) is
    carried out per axis and the two axis sums are multiplied. The result is
    unnormalized; compare ratios only.

    Raises:
        GridResolutionError: if ``grid`` is too small or too coarse. The error
            carries the required extent and point count.
    """
    rho_s = np.asarray(rho_s, float)
    rho_i = np.asarray(rho_i, float)
    rho_s, rho_i = np.broadcast_arrays(rho_s, rho_i)
    if rho_s.shape[-1:] != (2,):
        raise ValueError("positions need a trailing axis of length 2")
    max_offset = float(max(np.max(np.abs(rho_s), initial=0.0), np.max(np.abs(rho_i), initial=0.0)))
    if grid is None:
        grid = required_momentum_grid(p, max_offset)
    _check_grid(p, grid, max_offset)

    q = grid.nodes
    qs, qi = np.meshgrid(q, q, indexing="ij")
    zeros = np.zeros_like(qs)
    # wavevectors along one axis only; C restricted to that axis
    c_axis = amplitude_c(p, np.stack([qs, zeros], axis=-1), np.stack([qi, zeros], axis=-1))

    shape = rho_s.shape[:-1]
    flat_s = rho_s.reshape(-1, 2)
    flat_i = rho_i.reshape(-1, 2)
    amplitude = np.ones(flat_s.shape[0], dtype=complex)
    for axis in (0, 1):
        phase_s = np.exp(1j * np.outer(q, flat_s[:, axis]))
        phase_i = np.exp(1j * np.outer(q, flat_i[:, axis]))
        amplitude *= np.sum(phase_s * (c_axis @ phase_i), axis=0)
    density = np.abs(amplitude * grid.spacing**2) ** 2
    return density.reshape(shape)
