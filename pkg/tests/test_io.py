import json

import numpy as np
import pytest

from qiup import io

GOLDEN_PGM = b"P5\n3 2\n65535\n" + bytes(
    # top row is y index 1: [1.0, 0.5, 0.25] -> 65535, 32768, 16384
    [0xFF, 0xFF, 0x80, 0x00, 0x40, 0x00,
     # bottom row: [0, 1e-6, 1/3] -> 0, 0, 21845
     0x00, 0x00, 0x00, 0x00, 0x55, 0x55]
)


def test_pgm_golden_bytes(tmp_path):
    img = np.array([[0.0, 1e-6, 1 / 3], [1.0, 0.5, 0.25]])
    io.write_pgm(tmp_path / "a.pgm", img)
    assert (tmp_path / "a.pgm").read_bytes() == GOLDEN_PGM


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.uniform(size=(7, 11))
    io.write_pgm(tmp_path / "b.pgm", img)
    back = io.read_pgm(tmp_path / "b.pgm")
    assert back.shape == img.shape
    np.testing.assert_array_equal(back, io.to_pgm_samples(img))


def test_pgm_rejects_out_of_range(tmp_path):
    with pytest.raises(ValueError):
        io.write_pgm(tmp_path / "c.pgm", np.array([[1.5]]))
    with pytest.raises(ValueError):
        io.write_pgm(tmp_path / "c.pgm", np.array([[-0.1]]))


def test_csv_format(tmp_path):
    io.write_csv(tmp_path / "t.csv", ["x_m", "g", "ok"], [(1.23456789012e-6, 1 / 3, True), (0.0, np.nan, False)])
    text = (tmp_path / "t.csv").read_text()
    assert text == "x_m,g,ok\n1.23456789e-06,0.333333333,true\n0,,false\n"


def test_csv_read_back(tmp_path):
    io.write_csv(tmp_path / "t.csv", ["a_m", "b"], [(1.0, 2.0), (3.5, np.nan)])
    header, data = io.read_csv(tmp_path / "t.csv")
    assert header == ["a_m", "b"]
    assert data[0, 1] == 2.0 and np.isnan(data[1, 1])


def test_report_schema(tmp_path):
    rep = io.Report("resolve", {"spdc": {"lambda_s": 8.1e-7}})
    rep.add("d_min_analytic", np.float64(6.4e-6), "m")
    rep.add("m0", 3.48, "1")
    rep.warnings.append("something")
    rep.files.append("x.csv")
    rep.write(tmp_path / "r.json")
    d = json.loads((tmp_path / "r.json").read_text())
    assert d["schema_version"] == 1
    assert d["command"] == "resolve"
    assert list(d) == ["schema_version", "tool", "version", "command", "inputs", "outputs", "warnings", "files"]
    assert d["outputs"]["d_min_analytic"] == {"value": 6.4e-6, "unit": "m"}
    assert d["warnings"] == ["something"]
