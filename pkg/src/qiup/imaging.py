"""Image formation: camera count rates and the intensity-subtraction image.

The camera sees, at each pixel position rho_c,

    R(rho_c) = int d^2rho_o K(rho_c, rho_o) [1 + |T| cos(phi_in - arg T)]

with K(rho_c, rho_o) = P(rho_c/M_s, rho_o/M_I). The image function is
G = R(phi_in=0) - R(phi_in=pi) = 2 int K |T|.

Both kernels in use (the reduced correlation kernel and the full density
including the pump envelope) are products of one Gaussian factor per
Cartesian axis. Every object model is therefore reduced to

    G[b, a] = sum_k f_k X_k(x_a) Y_k(y_b)

i.e. one matrix product per image, with closed-form X_k, Y_k for points and
rectangles and midpoint-rule sampling for gridded maps. Kernels are
unnormalized weights with unit peak; absolute count rates are not modeled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.special import erf, erfc

from .errors import InvalidParameterError, QuadratureResolutionError, ReducedKernelWarning
from .kernel import VALIDITY_THRESHOLD, SpdcParams, TransversePoint, reduced_kernel_validity

KERNELS = ("reduced", "full")
_T_TOL = 1e-12


@dataclass(frozen=True)
class OpticsParams:
    """Interferometer geometry.

    Attributes:
        m_s: Source-to-camera magnification of the signal arm.
        m_i: Source-to-object magnification of the idler arm.
        phi_in: Interferometer phase in radians.
    """

    m_s: float = 1.0
    m_i: float = 1.0
    phi_in: float = 0.0

    def __post_init__(self):
        for name in ("m_s", "m_i"):
            value = getattr(self, name)
            if value == 0 or not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite and non-zero, got {value!r}")
        if not math.isfinite(self.phi_in):
            raise InvalidParameterError(f"phi_in must be finite, got {self.phi_in!r}")

    @property
    def magnification(self) -> float:
        """Object-to-camera magnification M = M_s / M_I."""
        return self.m_s / self.m_i

    def with_phase(self, phi_in: float) -> "OpticsParams":
        return OpticsParams(self.m_s, self.m_i, phi_in)


# -- scene objects -------------------------------------------------------------


def _check_transmission(t, what):
    if abs(t) > 1.0 + _T_TOL:
        raise InvalidParameterError(f"{what}: |T| = {abs(t):.6g} exceeds 1")


@dataclass(frozen=True)
class PointSet:
    """Ideal point objects, T = sum_k a_k delta(rho_o - rho_k).

    ``points`` holds ``(TransversePoint, complex amplitude)`` pairs with
    |a_k| <= 1.
    """

    points: tuple

    def __post_init__(self):
        pts = tuple((TransversePoint(*map(float, pos)), complex(amp)) for pos, amp in self.points)
        for pos, amp in pts:
            _check_transmission(amp, f"point at {tuple(pos)}")
        object.__setattr__(self, "points", pts)

    def absorptive(self) -> "PointSet":
        return PointSet(tuple((pos, abs(a)) for pos, a in self.points))


@dataclass(frozen=True)
class RectAperture:
    """Axis-aligned rectangle of uniform complex transmission.

    Infinite ``width``/``height`` are allowed and describe a strip or the
    whole plane.
    """

    center: TransversePoint
    width: float
    height: float
    transmission: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", TransversePoint(*map(float, self.center)))
        object.__setattr__(self, "transmission", complex(self.transmission))
        if not (self.width > 0 and self.height > 0):
            raise InvalidParameterError("aperture width and height must be positive")
        _check_transmission(self.transmission, f"aperture at {tuple(self.center)}")

    @property
    def bounds(self):
        cx, cy = self.center
        return (cx - self.width / 2, cx + self.width / 2, cy - self.height / 2, cy + self.height / 2)


@dataclass(frozen=True)
class RectApertures:
    """Non-overlapping rectangular apertures in an opaque screen."""

    apertures: tuple

    def __post_init__(self):
        aps = tuple(self.apertures)
        object.__setattr__(self, "apertures", aps)
        for i, a in enumerate(aps):
            ax0, ax1, ay0, ay1 = a.bounds
            for b in aps[i + 1 :]:
                bx0, bx1, by0, by1 = b.bounds
                if min(ax1, bx1) > max(ax0, bx0) and min(ay1, by1) > max(ay0, by0):
                    raise InvalidParameterError(
                        f"apertures at {tuple(a.center)} and {tuple(b.center)} overlap"
                    )

    def absorptive(self) -> "RectApertures":
        return RectApertures(
            tuple(RectAperture(a.center, a.width, a.height, abs(a.transmission)) for a in self.apertures)
        )


@dataclass(frozen=True)
class SampledMap:
    """Complex transmission sampled on a uniform grid.

    ``values[j, i]`` is T at ``(origin.x + i*pitch, origin.y + j*pitch)``;
    T is zero outside the sampled window.
    """

    values: np.ndarray
    pitch: float
    origin: TransversePoint = TransversePoint(0.0, 0.0)

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim != 2 or vals.size == 0:
            raise InvalidParameterError("sampled map needs a non-empty 2D array")
        if not np.all(np.isfinite(vals)):
            raise InvalidParameterError("sampled map contains non-finite values")
        if np.max(np.abs(vals)) > 1.0 + _T_TOL:
            raise InvalidParameterError(f"sampled map has |T| up to {np.max(np.abs(vals)):.6g} > 1")
        if not self.pitch > 0:
            raise InvalidParameterError("sampled map pitch must be positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", TransversePoint(*map(float, self.origin)))

    @property
    def x(self):
        return self.origin.x + self.pitch * np.arange(self.values.shape[1])

    @property
    def y(self):
        return self.origin.y + self.pitch * np.arange(self.values.shape[0])

    def absorptive(self) -> "SampledMap":
        return SampledMap(np.abs(self.values), self.pitch, self.origin)

    @classmethod
    def read(cls, path) -> "SampledMap":
        """Read the plain-text grid format.

        Header ``nx ny pitch_m origin_x_m origin_y_m``, then ``nx*ny`` lines
        of ``re im``, row-major (x varies fastest).
        """
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 5:
                raise InvalidParameterError(f"{path}: header must have 5 fields, got {len(header)}")
            nx, ny = int(header[0]), int(header[1])
            pitch, ox, oy = (float(v) for v in header[2:])
            data = np.loadtxt(fh, ndmin=2)
        if data.shape != (nx * ny, 2):
            raise InvalidParameterError(f"{path}: expected {nx * ny} lines of 're im', got {data.shape[0]}")
        values = (data[:, 0] + 1j * data[:, 1]).reshape(ny, nx)
        return cls(values, pitch, TransversePoint(ox, oy))

    def write(self, path) -> None:
        ny, nx = self.values.shape
        lines = [f"{nx} {ny} {float(self.pitch)!r} {float(self.origin.x)!r} {float(self.origin.y)!r}"]
        lines += [f"{float(v.real)!r} {float(v.imag)!r}" for v in self.values.ravel()]
        Path(path).write_text("\n".join(lines) + "\n")


SceneObject = Union[PointSet, RectApertures, SampledMap]


def point_pair(separation: float, amplitude: complex = 1.0) -> PointSet:
    """Two points at (+-separation/2, 0)."""
    h = separation / 2.0
    return PointSet((((h, 0.0), amplitude), ((-h, 0.0), amplitude)))


def square_aperture_pair(separation: float, side: float, transmission: complex = 1.0) -> RectApertures:
    """Two square apertures of the given side centered at (+-separation/2, 0)."""
    h = separation / 2.0
    return RectApertures(
        (
            RectAperture((h, 0.0), side, side, transmission),
            RectAperture((-h, 0.0), side, side, transmission),
        )
    )


def uniform(transmission: complex = 1.0) -> RectApertures:
    """Object with constant transmission over the whole plane."""
    return RectApertures((RectAperture((0.0, 0.0), math.inf, math.inf, transmission),))


# -- camera and results --------------------------------------------------------


@dataclass(frozen=True)
class CameraGrid:
    """Pixel raster of the camera. Pixel (row j, column i) sits at
    ``center + ((i - (nx-1)/2) * pitch, (j - (ny-1)/2) * pitch)``; rows run
    along increasing y."""

    nx: int
    ny: int
    pitch: float
    center: TransversePoint = TransversePoint(0.0, 0.0)

    def __post_init__(self):
        if int(self.nx) < 1 or int(self.ny) < 1:
            raise InvalidParameterError("camera needs at least one pixel along each axis")
        if not self.pitch > 0:
            raise InvalidParameterError("camera pitch must be positive")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "center", TransversePoint(*map(float, self.center)))

    @property
    def x(self) -> np.ndarray:
        return self.center.x + self.pitch * (np.arange(self.nx) - (self.nx - 1) / 2.0)

    @property
    def y(self) -> np.ndarray:
        return self.center.y + self.pitch * (np.arange(self.ny) - (self.ny - 1) / 2.0)

    def pixel_position(self, row: int, col: int) -> TransversePoint:
        return TransversePoint(
            self.center.x + self.pitch * (col - (self.nx - 1) / 2.0),
            self.center.y + self.pitch * (row - (self.ny - 1) / 2.0),
        )


@dataclass(frozen=True)
class ImageResult:
    """Scalar field over a camera grid plus what produced it."""

    grid: CameraGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.ny, self.grid.nx):
            raise ValueError(f"values shape {vals.shape} does not match grid {(self.grid.ny, self.grid.nx)}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("image values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def render(result: ImageResult, mode: str = "peak-normalized") -> np.ndarray:
    """Raster for display or export: ``raw`` or ``peak-normalized``."""
    if mode == "raw":
        return np.array(result.values)
    if mode != "peak-normalized":
        raise ValueError(f"unknown render mode {mode!r}")
    peak = float(np.max(result.values))
    if peak <= 0:
        raise ValueError("cannot peak-normalize a field whose maximum is not positive")
    return result.values / peak


# -- kernel evaluation ---------------------------------------------------------


def object_plane_sigma(p: SpdcParams, m_i: float) -> float:
    """Standard width of the reduced kernel on the object plane."""
    return abs(m_i) * math.sqrt(p.crystal_length * p.wavelength_sum / (8.0 * math.pi))


def _axis_coefficients(p: SpdcParams, o: OpticsParams, kernel: str, xc):
    """Per-axis kernel as a Gaussian in the source-plane idler coordinate u = rho_o/M_I.

    Returns (c2, centre, offset) with kernel = exp(-offset) * exp(-c2 (u - centre)^2),
    where ``centre`` and ``offset`` are arrays over camera positions ``xc``.
    """
    if kernel not in KERNELS:
        raise ValueError(f"kernel must be one of {KERNELS}, got {kernel!r}")
    xs = np.asarray(xc, float) / o.m_s
    gamma = p.correlation_rate
    alpha = p.pump_rate if kernel == "full" else 0.0
    ls, li = p.lambda_s, p.lambda_i
    # alpha (li xs + ls u)^2 + gamma (xs - u)^2 = c2 u^2 + 2 c1 u + c0
    c2 = alpha * ls * ls + gamma
    c1 = (alpha * li * ls - gamma) * xs
    c0 = (alpha * li * li + gamma) * xs * xs
    centre = -c1 / c2
    offset = c0 - c1 * c1 / c2
    return c2, centre, offset


def _point_factor(p, o, kernel, xc, xo):
    """Kernel value along one axis: shape (len(xc), len(xo))."""
    c2, centre, offset = _axis_coefficients(p, o, kernel, xc)
    u = np.asarray(xo, float) / o.m_i
    return np.exp(-offset[:, None] - c2 * (u[None, :] - centre[:, None]) ** 2)


def _gauss_segment(c, lo, hi):
    """int_lo^hi exp(-c t^2) dt, using erfc on the tails to keep precision."""
    a = math.sqrt(c) * lo
    b = math.sqrt(c) * hi
    with np.errstate(invalid="ignore"):
        val = np.where(
            a >= 0,
            erfc(a) - erfc(b),
            np.where(b <= 0, erfc(-b) - erfc(-a), erf(b) - erf(a)),
        )
    return 0.5 * math.sqrt(math.pi / c) * val


def _interval_factor(p, o, kernel, xc, lo, hi):
    """int_lo^hi kernel d(x_o) along one axis: shape (len(xc), n_intervals)."""
    c2, centre, offset = _axis_coefficients(p, o, kernel, xc)
    ulo = np.asarray(lo, float) / o.m_i
    uhi = np.asarray(hi, float) / o.m_i
    u0, u1 = np.minimum(ulo, uhi), np.maximum(ulo, uhi)
    seg = _gauss_segment(c2, u0[None, :] - centre[:, None], u1[None, :] - centre[:, None])
    return abs(o.m_i) * np.exp(-offset)[:, None] * seg


def _weights(obj, mode: str, phi: float):
    """Per-element modulation weights: |T| for the image, |T| cos(phi - arg T) for count rates."""
    if isinstance(obj, PointSet):
        t = np.array([a for _, a in obj.points], dtype=complex)
    elif isinstance(obj, RectApertures):
        t = np.array([a.transmission for a in obj.apertures], dtype=complex)
    else:
        t = obj.values
    if mode == "image":
        return np.abs(t)
    return np.abs(t) * np.cos(phi - np.angle(t))


def _modulation(p, o, obj, xc, yc, kernel, mode):
    """int K(rho_c, rho_o) f(T(rho_o)) d^2rho_o on the camera grid (yc rows, xc columns)."""
    xc = np.atleast_1d(np.asarray(xc, float))
    yc = np.atleast_1d(np.asarray(yc, float))
    f = _weights(obj, mode, o.phi_in)
    if isinstance(obj, PointSet):
        if not obj.points:
            return np.zeros((yc.size, xc.size))
        xo = np.array([pos.x for pos, _ in obj.points])
        yo = np.array([pos.y for pos, _ in obj.points])
        kx = _point_factor(p, o, kernel, xc, xo)
        ky = _point_factor(p, o, kernel, yc, yo)
        return (ky * f) @ kx.T
    if isinstance(obj, RectApertures):
        if not obj.apertures:
            return np.zeros((yc.size, xc.size))
        b = np.array([a.bounds for a in obj.apertures])
        kx = _interval_factor(p, o, kernel, xc, b[:, 0], b[:, 1])
        ky = _interval_factor(p, o, kernel, yc, b[:, 2], b[:, 3])
        return (ky * f) @ kx.T
    if isinstance(obj, SampledMap):
        sigma = object_plane_sigma(p, o.m_i)
        if obj.pitch > sigma / 4.0 * (1 + 1e-12):
            raise QuadratureResolutionError(
                f"sampled map pitch {obj.pitch:.4g} m is coarser than sigma_o/4 = {sigma / 4:.4g} m",
                required_pitch=sigma / 4.0,
            )
        kx = _point_factor(p, o, kernel, xc, obj.x)
        ky = _point_factor(p, o, kernel, yc, obj.y)
        return ky @ f @ kx.T * obj.pitch**2
    raise TypeError(f"unsupported scene object {type(obj).__name__}")


def _background(p, o, xc, yc, kernel):
    """int K d^2rho_o over the whole object plane."""
    inf = np.array([math.inf])
    bx = _interval_factor(p, o, kernel, xc, -inf, inf)[:, 0]
    by = _interval_factor(p, o, kernel, yc, -inf, inf)[:, 0]
    return np.outer(by, bx)


def _validity_warnings(p: SpdcParams, kernel: str) -> list[str]:
    if kernel != "reduced":
        return []
    ratio = reduced_kernel_validity(p)
    if ratio <= VALIDITY_THRESHOLD:
        return []
    msg = (
        f"reduced kernel validity ratio {ratio:.3g} exceeds {VALIDITY_THRESHOLD}; "
        "the pump envelope is not flat across the correlation width"
    )
    warnings.warn(msg, ReducedKernelWarning, stacklevel=3)
    return [msg]


def _describe(obj) -> dict:
    if isinstance(obj, PointSet):
        return {
            "kind": "points",
            "points": [[pos.x, pos.y, [a.real, a.imag]] for pos, a in obj.points],
        }
    if isinstance(obj, RectApertures):
        return {
            "kind": "rects",
            "apertures": [
                [a.center.x, a.center.y, a.width, a.height, [a.transmission.real, a.transmission.imag]]
                for a in obj.apertures
            ],
        }
    ny, nx = obj.values.shape
    return {"kind": "sampled", "nx": nx, "ny": ny, "pitch": obj.pitch, "origin": list(obj.origin)}


def _meta(p, o, obj, kernel, quantity, warns):
    return {
        "quantity": quantity,
        "kernel": kernel,
        "spdc": {
            "lambda_s": p.lambda_s,
            "lambda_i": p.lambda_i,
            "crystal_length": p.crystal_length,
            "pump_waist": p.pump_waist,
        },
        "optics": {"m_s": o.m_s, "m_i": o.m_i, "phi_in": o.phi_in},
        "object": _describe(obj),
        "warnings": warns,
    }


def evaluate_image(p: SpdcParams, o: OpticsParams, obj: SceneObject, xc, yc, kernel: str = "reduced"):
    """Image function sampled on the tensor grid ``yc x xc`` (rows follow yc)."""
    return 2.0 * _modulation(p, o, obj, xc, yc, kernel, "image")


def evaluate_count_rate(p: SpdcParams, o: OpticsParams, obj: SceneObject, xc, yc, kernel: str = "reduced"):
    """Count rate at interferometer phase ``o.phi_in`` on the tensor grid ``yc x xc``."""
    return _background(p, o, np.atleast_1d(xc), np.atleast_1d(yc), kernel) + _modulation(
        p, o, obj, xc, yc, kernel, "count"
    )


def count_rate(
    p: SpdcParams, o: OpticsParams, obj: SceneObject, cam: CameraGrid, kernel: str = "reduced"
) -> ImageResult:
    """Single-photon count rate at every pixel, up to a constant factor.

    Point objects contribute ``a_k K(rho_c, rho_k)`` (delta weights) on top of
    the background integral of the kernel over the whole object plane.

    Raises:
        QuadratureResolutionError: if a sampled map is coarser than sigma_o/4.
    """
    warns = _validity_warnings(p, kernel)
    values = evaluate_count_rate(p, o, obj, cam.x, cam.y, kernel)
    meta = _meta(p, o, obj, kernel, "count_rate", warns)
    meta["phi_in"] = o.phi_in
    return ImageResult(cam, values, meta)


def image_function(
    p: SpdcParams, o: OpticsParams, obj: SceneObject, cam: CameraGrid, kernel: str = "reduced"
) -> ImageResult:
    """Image function G = R(phi=0) - R(phi=pi) = 2 int K |T| at every pixel."""
    warns = _validity_warnings(p, kernel)
    values = evaluate_image(p, o, obj, cam.x, cam.y, kernel)
    meta = _meta(p, o, obj, kernel, "image_function", warns)
    meta["phi_in"] = "subtraction"
    return ImageResult(cam, values, meta)


def image_function_by_subtraction(
    p: SpdcParams, o: OpticsParams, obj: SceneObject, cam: CameraGrid, kernel: str = "reduced"
) -> ImageResult:
    """Image function obtained literally as R+ - R- of the absorptive object."""
    absorptive = obj.absorptive()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReducedKernelWarning)
        plus = count_rate(p, o.with_phase(0.0), absorptive, cam, kernel)
        minus = count_rate(p, o.with_phase(math.pi), absorptive, cam, kernel)
    meta = dict(plus.meta)
    meta["quantity"] = "image_function"
    meta["phi_in"] = "subtraction"
    meta["warnings"] = _validity_warnings(p, kernel)
    return ImageResult(cam, plus.values - minus.values, meta)
