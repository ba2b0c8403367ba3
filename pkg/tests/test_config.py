import math
from pathlib import Path

import pytest

from qiup.config import RunConfig, parse_angle, parse_length, parse_number
from qiup.errors import ConfigError
from qiup.imaging import PointSet, RectApertures, SampledMap

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.cfg"))

BASE = """
[spdc]
lambda_s = 810 nm
lambda_i = 1.55 um
crystal_length = 2 mm
"""


@pytest.mark.parametrize(
    "text, value",
    [("810 nm", 8.1e-7), ("1.55um", 1.55e-6), ("3 µm", 3e-6), ("2 mm", 2e-3), ("0.5 cm", 5e-3), ("1e-3", 1e-3), ("-inf m", -math.inf)],
)
def test_parse_length(text, value):
    assert parse_length(text) == value


def test_parse_number_fraction():
    assert parse_number("1/5") == 0.2
    with pytest.raises(ValueError):
        parse_number("1/0")


def test_parse_angle():
    assert parse_angle("180 deg") == pytest.approx(math.pi)
    assert parse_angle("0.5") == 0.5
    with pytest.raises(ValueError):
        parse_angle("1 mm")


def test_parse_length_rejects_unknown_unit():
    with pytest.raises(ValueError):
        parse_length("3 furlongs")


def test_defaults_filled():
    cfg = RunConfig.from_text(BASE)
    assert cfg.spdc().pump_waist == 1e-3
    assert cfg.optics().m_i == 1.0
    assert cfg.camera().nx == 201
    assert cfg.beta_max == 0.81


def test_overrides_take_precedence():
    cfg = RunConfig.from_text(BASE, overrides=["spdc.crystal_length=5 mm", "optics.m_i=1/5", "criterion.beta_max=0.7"])
    assert cfg.spdc().crystal_length == 5e-3
    assert cfg.optics().m_i == 0.2
    assert cfg.beta_max == 0.7


def test_bad_override_syntax():
    with pytest.raises(ConfigError):
        RunConfig.from_text(BASE, overrides=["crystal_length=5 mm"])


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.name)
def test_dump_round_trip_idempotent(path):
    cfg = RunConfig.load(path)
    once = cfg.dump()
    again = RunConfig.from_text(once, base_dir=path.parent)
    assert again.sections == cfg.sections
    assert again.dump() == once


def test_object_kinds(tmp_path):
    pts = RunConfig.from_text(BASE + "[object]\nkind = points\npoints = 0, 0; 10 um, -5 um, 0.5+0.5j\n")
    obj = pts.scene_object()
    assert isinstance(obj, PointSet) and len(obj.points) == 2
    assert obj.points[1][1] == 0.5 + 0.5j
    rects = RunConfig.from_text(BASE + "[object]\nkind = rects\nrects = 0, 0, 5 um, 5 um, 0.3\n").scene_object()
    assert isinstance(rects, RectApertures)
    SampledMap([[1.0]], 1e-7, (0.0, 0.0)).write(tmp_path / "map.txt")
    (tmp_path / "c.cfg").write_text(BASE + "[object]\nkind = sampled\nfile = map.txt\n")
    cfg = RunConfig.load(tmp_path / "c.cfg")
    assert isinstance(cfg.scene_object(), SampledMap)
    assert Path(cfg.get("object", "file")).is_absolute()


def test_sweep_range_expansion():
    cfg = RunConfig.from_text(BASE + "[sweep]\naxis = crystal_length\nrange = 1 mm, 3 mm, 3\n")
    assert cfg.get("sweep", "values") == [1e-3, 2e-3, 3e-3]


def _error(text):
    with pytest.raises(ConfigError) as err:
        RunConfig.from_text(text)
    return str(err.value)


def test_unknown_key_reports_line():
    msg = _error(BASE + "[optics]\nm_s = 1\nmagnification = 3\n")
    assert "magnification" in msg and "line 8" in msg


def test_bad_value_reports_line():
    msg = _error(BASE + "[camera]\npitch = 2 parsecs\n")
    assert "pitch" in msg and "line 7" in msg


def test_unknown_section():
    assert "[detector]" in _error(BASE + "[detector]\nqe = 0.5\n")


def test_missing_required_key():
    assert "crystal_length" in _error("[spdc]\nlambda_s = 810 nm\nlambda_i = 1550 nm\n")


def test_invalid_physics_rejected():
    assert "beta_max" in _error(BASE + "[criterion]\nbeta_max = 1.5\n")
    assert "m_i" in _error(BASE + "[optics]\nm_i = 0\n")


def test_syntax_error():
    _error("this is not ini")


def test_unknown_object_kind():
    cfg = RunConfig.from_text(BASE)
    with pytest.raises(ConfigError):
        cfg.scene_object()
    with pytest.raises(ConfigError):
        RunConfig.from_text(BASE + "[object]\nkind = star\n")


def test_to_dict_is_json_ready():
    import json

    cfg = RunConfig.from_text(BASE + "[object]\nkind = point_pair\nseparation = 70 um\namplitude = 0.5j\n")
    d = json.loads(json.dumps(cfg.to_dict()))
    assert d["object"]["amplitude"] == [0.0, 0.5]
    assert d["spdc"]["lambda_i"] == 1.55e-6
