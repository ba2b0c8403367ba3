import math
import warnings

import numpy as np
import pytest
from scipy import ndimage

from qiup import imaging as im
from qiup.errors import InvalidParameterError, QuadratureResolutionError, ReducedKernelWarning
from qiup.imaging import CameraGrid, OpticsParams, PointSet, RectAperture, RectApertures, SampledMap
from qiup.kernel import SpdcParams, TransversePoint
from qiup.resolution import psf_spread

from .conftest import MM, NM, UM

CAM = CameraGrid(61, 41, 2 * UM)


def test_opaque_object_gives_constant_count_rate(nir, unit_optics):
    opaque = im.uniform(0.0)
    r = im.count_rate(nir, unit_optics, opaque, CameraGrid(21, 21, 5 * UM)).values
    assert np.ptp(r) <= 1e-12 * np.max(r)
    g = im.image_function(nir, unit_optics, opaque, CAM).values
    assert np.all(g == 0)


def test_phase_zero_and_pi_bracket_background(nir, unit_optics):
    obj = im.square_aperture_pair(40 * UM, 10 * UM, 0.7)
    plus = im.count_rate(nir, unit_optics.with_phase(0.0), obj, CAM).values
    minus = im.count_rate(nir, unit_optics.with_phase(math.pi), obj, CAM).values
    bg = im.count_rate(nir, unit_optics, im.uniform(0.0), CAM).values
    assert np.all(plus >= bg) and np.all(minus <= bg)
    np.testing.assert_allclose(plus + minus, 2 * bg, rtol=1e-12)


def test_phase_object_shifts_fringe(nir):
    theta = 0.9
    t = 0.6 * np.exp(1j * theta)
    cam = CameraGrid(5, 5, 1 * UM)
    bg = im.count_rate(nir, OpticsParams(), im.uniform(0.0), cam).values
    for phi in np.linspace(0, 2 * math.pi, 7):
        r = im.count_rate(nir, OpticsParams(phi_in=phi), im.uniform(t), cam).values
        np.testing.assert_allclose(r, bg * (1 + 0.6 * math.cos(phi - theta)), rtol=1e-12)


def test_point_image_is_gaussian_psf(nir):
    o = OpticsParams(m_s=3.0, m_i=1.5)
    g = im.image_function(nir, o, PointSet([((0.0, 0.0), 1.0)]), CameraGrid(101, 1, 1 * UM)).values[0]
    x = CameraGrid(101, 1, 1 * UM).x
    spread = psf_spread(nir, o.m_s)
    np.testing.assert_allclose(g / g.max(), np.exp(-((x / spread) ** 2)), rtol=1e-12, atol=1e-15)


def test_point_image_centred_at_magnified_position(nir):
    o = OpticsParams(m_s=2.0, m_i=0.5)
    obj = PointSet([((5 * UM, -2 * UM), 1.0)])
    cam = CameraGrid(81, 81, 1 * UM)
    g = im.image_function(nir, o, obj, cam).values
    row, col = np.unravel_index(np.argmax(g), g.shape)
    pos = cam.pixel_position(row, col)
    assert pos.x == pytest.approx(20 * UM) and pos.y == pytest.approx(-8 * UM)


def test_unit_transmission_is_flat(nir, unit_optics):
    g = im.image_function(nir, unit_optics, im.uniform(1.0), CAM).values
    assert np.ptp(g) <= 1e-12 * g.max()
    assert g.max() > 0


@pytest.mark.parametrize("kernel", ["reduced", "full"])
def test_subtraction_matches_direct(nir, unit_optics, kernel):
    objects = [
        im.point_pair(30 * UM, 0.8 * np.exp(0.4j)),
        im.square_aperture_pair(50 * UM, 12 * UM, -0.5j),
        SampledMap(np.full((9, 7), 0.3 + 0.4j), 1 * UM, (-3 * UM, -4 * UM)),
    ]
    for obj in objects:
        direct = im.image_function(nir, unit_optics, obj, CAM, kernel).values
        sub = im.image_function_by_subtraction(nir, unit_optics, obj, CAM, kernel).values
        assert np.max(np.abs(direct - sub)) <= 1e-12 * np.max(np.abs(direct))


def test_linear_in_transmission_magnitude(nir, unit_optics):
    a = RectAperture((0.0, 0.0), 10 * UM, 20 * UM, 0.3)
    b = RectAperture((30 * UM, 5 * UM), 15 * UM, 8 * UM, 0.5)
    ga = im.image_function(nir, unit_optics, RectApertures([a]), CAM).values
    gb = im.image_function(nir, unit_optics, RectApertures([b]), CAM).values
    gab = im.image_function(nir, unit_optics, RectApertures([a, b]), CAM).values
    np.testing.assert_allclose(gab, ga + gb, rtol=1e-12, atol=1e-15 * gab.max())


def test_magnification_covariance(nir):
    # scaling object and M_I together leaves the camera image unchanged
    cam = CameraGrid(41, 41, 2 * UM)
    base = im.image_function(nir, OpticsParams(1.0, 1.0), im.point_pair(30 * UM), cam).values
    scaled = im.image_function(nir, OpticsParams(1.0, 2.5), im.point_pair(75 * UM), cam).values
    np.testing.assert_allclose(scaled, base, rtol=1e-12)


def test_sampled_map_matches_gaussian_filter(nir, unit_optics):
    sigma = im.object_plane_sigma(nir, 1.0)
    pitch = sigma / 5
    n = 201
    rng = np.random.default_rng(3)
    t = np.zeros((n, n))
    t[60:140, 70:130] = 0.5
    t[90:110, 40:60] = rng.uniform(0, 1, size=(20, 20))
    origin = (-(n - 1) / 2 * pitch, -(n - 1) / 2 * pitch)
    obj = SampledMap(t, pitch, origin)
    cam = CameraGrid(n, n, pitch)
    g = im.image_function(nir, unit_optics, obj, cam).values
    oracle = ndimage.gaussian_filter(t, sigma=sigma / pitch, mode="constant", truncate=8.0)
    # gaussian_filter is a normalized kernel; ours has area 2 pi sigma^2 and the factor 2 of G
    oracle *= 2 * 2 * math.pi * sigma**2
    np.testing.assert_allclose(g, oracle, atol=1e-6 * oracle.max())


def test_single_pixel_map_approaches_point(nir, unit_optics):
    pitch = im.object_plane_sigma(nir, 1.0) / 20
    one = SampledMap(np.ones((1, 1)), pitch, (10 * UM, 0.0))
    point = PointSet([((10 * UM, 0.0), 1.0)])
    gm = im.image_function(nir, unit_optics, one, CAM).values
    gp = im.image_function(nir, unit_optics, point, CAM).values
    np.testing.assert_allclose(gm / pitch**2, gp, rtol=1e-12)


def test_coarse_map_refused(nir, unit_optics):
    sigma = im.object_plane_sigma(nir, 1.0)
    obj = SampledMap(np.ones((4, 4)), sigma / 3, (0.0, 0.0))
    with pytest.raises(QuadratureResolutionError) as err:
        im.image_function(nir, unit_optics, obj, CAM)
    assert err.value.required_pitch == pytest.approx(sigma / 4)


def test_render_modes(nir, unit_optics):
    res = im.image_function(nir, unit_optics, im.point_pair(40 * UM), CAM)
    raw = im.render(res, "raw")
    norm = im.render(res)
    assert norm.max() == 1.0
    np.testing.assert_allclose(norm * raw.max(), raw, rtol=1e-15)
    with pytest.raises(ValueError):
        im.render(res, "log")
    assert not res.values.flags.writeable


def test_sampled_map_file_round_trip(tmp_path):
    vals = np.array([[0.1, 0.2 + 0.3j, 0.0], [-0.5j, 0.25, 1.0]])
    obj = SampledMap(vals, 0.5 * UM, (-1 * UM, 2 * UM))
    path = tmp_path / "t.txt"
    obj.write(path)
    back = SampledMap.read(path)
    np.testing.assert_array_equal(back.values, obj.values)
    assert back.pitch == obj.pitch and back.origin == obj.origin


def test_sampled_map_file_wrong_length(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("2 2 1e-6 0 0\n1 0\n1 0\n1 0\n")
    with pytest.raises(InvalidParameterError):
        SampledMap.read(path)


@pytest.mark.parametrize(
    "make",
    [
        lambda: PointSet([((0.0, 0.0), 1.2)]),
        lambda: RectAperture((0.0, 0.0), 0.0, 1 * UM),
        lambda: SampledMap(np.full((2, 2), 1.5), 1 * UM, (0.0, 0.0)),
        lambda: RectApertures([RectAperture((0.0, 0.0), 2 * UM, 2 * UM), RectAperture((1 * UM, 0.0), 2 * UM, 2 * UM)]),
        lambda: OpticsParams(m_s=0.0),
        lambda: CameraGrid(0, 5, 1 * UM),
    ],
)
def test_invalid_inputs(make):
    with pytest.raises(InvalidParameterError):
        make()


def test_reduced_kernel_warning_for_tight_pump(unit_optics):
    tight = SpdcParams(810 * NM, 1550 * NM, 5 * MM, 50 * UM)
    with pytest.warns(ReducedKernelWarning):
        res = im.image_function(tight, unit_optics, im.point_pair(40 * UM), CAM)
    assert res.meta["warnings"]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        im.image_function(tight, unit_optics, im.point_pair(40 * UM), CAM, kernel="full")


def test_full_kernel_peak_shift_small(nir, unit_optics):
    # off-axis point at a quarter pump waist: the pump envelope pulls the image
    # peak by less than 2% of the PSF spread
    x0 = 0.25 * nir.pump_waist
    spread = psf_spread(nir, 1.0)
    x = x0 + np.linspace(-3 * spread, 3 * spread, 6001)
    obj = PointSet([((x0, 0.0), 1.0)])
    g = im.evaluate_image(nir, unit_optics, obj, x, [0.0], kernel="full")[0]
    shift = x[np.argmax(g)] - x0
    assert abs(shift) < 0.02 * spread
    assert abs(shift) > 0


def test_full_kernel_tends_to_reduced_for_wide_pump(unit_optics):
    wide = SpdcParams(810 * NM, 1550 * NM, 2 * MM, 1.0)
    obj = im.point_pair(40 * UM)
    full = im.image_function(wide, unit_optics, obj, CAM, "full").values
    red = im.image_function(wide, unit_optics, obj, CAM, "reduced").values
    np.testing.assert_allclose(full / full.max(), red / red.max(), atol=1e-6)


def test_meta_records_inputs(nir, unit_optics):
    res = im.image_function(nir, unit_optics, im.point_pair(40 * UM), CAM)
    assert res.meta["quantity"] == "image_function"
    assert res.meta["spdc"]["crystal_length"] == nir.crystal_length
    assert res.meta["object"]["kind"] == "points"
