"""Run configuration: INI-style ``key = value`` blocks with unit suffixes.

Lengths accept ``m, cm, mm, um, µm, μm, nm, pm`` (bare numbers are meters),
angles accept ``rad`` or ``deg``, and dimensionless numbers may be written
as fractions (``m_i = 1/5``). Everything is converted to SI on load;
:meth:`RunConfig.dump` writes the normalized form back out, so
load -> dump -> load is idempotent.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, InvalidParameterError
from .imaging import (
    CameraGrid,
    OpticsParams,
    PointSet,
    RectAperture,
    RectApertures,
    SampledMap,
    point_pair,
    square_aperture_pair,
    uniform,
)
from .kernel import SpdcParams
from .resolution import DEFAULT_BETA_MAX

# divisors to meters; dividing by an exact power of ten rounds correctly
LENGTH_UNITS = {
    "m": 1.0,
    "cm": 1e2,
    "mm": 1e3,
    "um": 1e6,
    "µm": 1e6,
    "μm": 1e6,
    "nm": 1e9,
    "pm": 1e12,
}
ANGLE_UNITS = {"rad": 1.0, "deg": math.pi / 180.0}

_QUANTITY = re.compile(r"^\s*([-+]?inf|[-+0-9.eE/]+)\s*([a-zA-Zµμ]*)\s*$")

LENGTH_AXES = ("crystal_length", "lambda_s", "lambda_i", "pump_waist")
SWEEP_AXES = ("crystal_length", "m_i", "lambda_s", "lambda_i", "beta_max")
OBJECT_KINDS = ("points", "point_pair", "rects", "aperture_pair", "uniform", "sampled")


def parse_number(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text!r}") from None


def parse_length(text: str) -> float:
    """``'810 nm'`` -> 8.1e-07."""
    m = _QUANTITY.match(text)
    if not m:
        raise ValueError(f"cannot parse length {text!r}")
    value, unit = m.groups()
    if unit and unit not in LENGTH_UNITS:
        raise ValueError(f"unknown length unit {unit!r} in {text!r}")
    return parse_number(value) / LENGTH_UNITS[unit or "m"]


def parse_angle(text: str) -> float:
    m = _QUANTITY.match(text)
    if not m:
        raise ValueError(f"cannot parse angle {text!r}")
    value, unit = m.groups()
    if unit and unit not in ANGLE_UNITS:
        raise ValueError(f"unknown angle unit {unit!r} in {text!r}")
    return parse_number(value) * ANGLE_UNITS.get(unit or "rad")


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _records(text: str) -> list[list[str]]:
    return [_split_list(rec) for rec in text.split(";") if rec.strip()]


def _fmt_length(v: float) -> str:
    return f"{v!r} m"


def _fmt_complex(z: complex) -> str:
    return repr(complex(z)).strip("()")


def _parse_complex(text: str) -> complex:
    return complex(text.replace(" ", ""))


def _parse_points(text):
    out = []
    for r in _records(text):
        if len(r) not in (2, 3):
            raise ValueError(f"point entry needs 'x, y[, amplitude]', got {r}")
        out.append((parse_length(r[0]), parse_length(r[1]), _parse_complex(r[2]) if len(r) == 3 else 1 + 0j))
    return out


def _parse_rects(text):
    out = []
    for r in _records(text):
        if len(r) not in (4, 5):
            raise ValueError(f"rect entry needs 'cx, cy, width, height[, T]', got {r}")
        geom = [parse_length(v) for v in r[:4]]
        out.append((*geom, _parse_complex(r[4]) if len(r) == 5 else 1 + 0j))
    return out


def _fmt_records(recs):
    return "; ".join(
        ", ".join(_fmt_complex(v) if isinstance(v, complex) else _fmt_length(v) for v in rec) for rec in recs
    )


# (parser, formatter) per value type
_TYPES = {
    "length": (parse_length, _fmt_length),
    "angle": (parse_angle, lambda v: f"{v!r} rad"),
    "float": (parse_number, repr),
    "int": (lambda t: int(parse_number(t)), str),
    "bool": (parse_bool, lambda v: "true" if v else "false"),
    "str": (str.strip, str),
    "complex": (_parse_complex, _fmt_complex),
    "lengths": (
        lambda t: [parse_length(x) for x in _split_list(t)],
        lambda vs: ", ".join(_fmt_length(v) for v in vs),
    ),
    "floats": (
        lambda t: [parse_number(x) for x in _split_list(t)],
        lambda vs: ", ".join(repr(v) for v in vs),
    ),
    "points": (_parse_points, _fmt_records),
    "rects": (_parse_rects, _fmt_records),
}

# section -> key -> (type, default); default None means optional, ... means required
SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "spdc": {
        "lambda_s": ("length", ...),
        "lambda_i": ("length", ...),
        "crystal_length": ("length", ...),
        "pump_waist": ("length", 1e-3),
    },
    "optics": {"m_s": ("float", 1.0), "m_i": ("float", 1.0), "phi_in": ("angle", 0.0)},
    "object": {
        "kind": ("str", None),
        "separation": ("length", None),
        "side": ("length", None),
        "amplitude": ("complex", None),
        "transmission": ("complex", None),
        "points": ("points", None),
        "rects": ("rects", None),
        "file": ("str", None),
    },
    "camera": {
        "nx": ("int", 201),
        "ny": ("int", 201),
        "pitch": ("length", 1e-6),
        "center_x": ("length", 0.0),
        "center_y": ("length", 0.0),
    },
    "criterion": {"beta_max": ("float", DEFAULT_BETA_MAX)},
    "farfield": {"f_i": ("length", None), "w_p": ("length", None)},
    "psf": {
        "overlay_lengths": ("lengths", None),
        "spread_lengths": ("lengths", None),
    },
    "resolve": {"numeric": ("bool", False), "aperture_side": ("length", None)},
    "sweep": {
        "axis": ("str", None),
        "values": ("floats", None),
        "series_axis": ("str", None),
        "series_values": ("floats", None),
        "numeric": ("bool", False),
        "aperture_side": ("length", None),
        "jobs": ("int", 1),
    },
}

# [sweep] accepts `range = start, stop, count` as shorthand for `values`
_SWEEP_RANGE = "range"


def _line_index(text: str) -> dict[tuple[str, str], int]:
    index, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
        elif "=" in stripped and section and not stripped.startswith(("#", ";")):
            index[(section, stripped.split("=", 1)[0].strip())] = lineno
        if section and stripped.startswith("["):
            index[(section, None)] = lineno
    return index


def _where(lines, section, key):
    line = lines.get((section, key))
    return f"[{section}] {key}" + (f" (line {line})" if line else "")


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _parse_sweep_values(raw: str, axis: str) -> list[float]:
    parse = parse_length if axis in LENGTH_AXES else parse_number
    return [parse(x) for x in _split_list(raw)]


@dataclass
class RunConfig:
    """Normalized configuration: ``sections[section][key]`` holds SI values."""

    sections: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    # -- construction --------------------------------------------------------

    @classmethod
    def from_text(cls, text: str, base_dir=None, overrides=()) -> "RunConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config syntax error: {exc}") from exc
        for item in overrides:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(f"override {item!r} must look like section.key=value")
            lhs, value = item.split("=", 1)
            section, key = lhs.strip().split(".", 1)
            if not parser.has_section(section):
                parser.add_section(section)
            parser.set(section, key.strip(), value.strip())
        return cls._normalize(parser, _line_index(text), Path(base_dir) if base_dir else Path.cwd())

    @classmethod
    def load(cls, path, overrides=()) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, base_dir=path.parent, overrides=overrides)

    @classmethod
    def _normalize(cls, parser, lines, base_dir) -> "RunConfig":
        sections: dict[str, dict[str, Any]] = {}
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}] (line {lines.get((section, None), '?')})")
        for section, keys in SCHEMA.items():
            present = parser.has_section(section)
            raw = dict(parser.items(section)) if present else {}
            out: dict[str, Any] = {}
            for key in raw:
                if key not in keys and not (section == "sweep" and key == _SWEEP_RANGE):
                    raise ConfigError(f"unknown key {_where(lines, section, key)}")
            for key, (kind, default) in keys.items():
                if key in raw:
                    if section == "sweep" and key in ("values", "series_values"):
                        continue
                    try:
                        out[key] = _TYPES[kind][0](raw[key])
                    except ValueError as exc:
                        raise ConfigError(f"bad value for {_where(lines, section, key)}: {exc}") from None
                elif default is ...:
                    if present or section == "spdc":
                        raise ConfigError(f"missing required key [{section}] {key}")
                elif default is not None:
                    out[key] = default
            if section == "sweep" and present:
                cls._normalize_sweep(raw, out, lines)
            if present or section in ("spdc", "optics", "camera", "criterion"):
                sections[section] = out
        obj = sections.get("object", {})
        if "file" in obj and not Path(obj["file"]).is_absolute():
            obj["file"] = str((base_dir / obj["file"]).resolve())
        cfg = cls(sections, base_dir)
        cfg._validate(lines)
        return cfg

    @staticmethod
    def _normalize_sweep(raw, out, lines):
        axis = out.get("axis")
        if axis not in SWEEP_AXES:
            raise ConfigError(f"{_where(lines, 'sweep', 'axis')} must be one of {SWEEP_AXES}, got {axis!r}")
        try:
            if "values" in raw:
                out["values"] = _parse_sweep_values(raw["values"], axis)
            elif _SWEEP_RANGE in raw:
                parts = _split_list(raw[_SWEEP_RANGE])
                if len(parts) != 3:
                    raise ValueError("range needs start, stop, count")
                start, stop = _parse_sweep_values(", ".join(parts[:2]), axis)
                out["values"] = [float(v) for v in np.linspace(start, stop, int(parse_number(parts[2])))]
            series = out.get("series_axis")
            if series is not None:
                if series not in SWEEP_AXES or series == axis:
                    raise ValueError(f"series_axis must be a different sweep axis, got {series!r}")
                out["series_values"] = _parse_sweep_values(raw.get("series_values", ""), series)
                if not out["series_values"]:
                    raise ValueError("series_values is empty")
        except ValueError as exc:
            raise ConfigError(f"bad [sweep] block: {exc}") from None
        if not out.get("values"):
            raise ConfigError("[sweep] needs a non-empty `values` list or `range = start, stop, count`")

    def _validate(self, lines):
        try:
            self.spdc()
            self.optics()
            self.camera()
            if not 0 < self.beta_max < 1:
                raise InvalidParameterError(f"beta_max must lie in (0, 1), got {self.beta_max}")
            if "object" in self.sections:
                self.scene_object()
        except InvalidParameterError as exc:
            raise ConfigError(f"invalid parameter: {exc}") from None

    # -- typed views -----------------------------------------------------------

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def spdc(self) -> SpdcParams:
        s = self.sections["spdc"]
        return SpdcParams(s["lambda_s"], s["lambda_i"], s["crystal_length"], s["pump_waist"])

    def optics(self) -> OpticsParams:
        o = self.sections["optics"]
        return OpticsParams(o["m_s"], o["m_i"], o["phi_in"])

    def camera(self) -> CameraGrid:
        c = self.sections["camera"]
        return CameraGrid(c["nx"], c["ny"], c["pitch"], (c["center_x"], c["center_y"]))

    @property
    def beta_max(self) -> float:
        return self.sections["criterion"]["beta_max"]

    def scene_object(self):
        o = self.sections.get("object")
        if not o:
            raise ConfigError("this command needs an [object] block")
        kind = o.get("kind")

        def need(key):
            if key not in o:
                raise ConfigError(f"[object] kind={kind} needs key {key!r}")
            return o[key]

        if kind == "point_pair":
            return point_pair(need("separation"), o.get("amplitude", 1.0))
        if kind == "aperture_pair":
            return square_aperture_pair(need("separation"), need("side"), o.get("transmission", 1.0))
        if kind == "uniform":
            return uniform(o.get("transmission", 1.0))
        if kind == "points":
            return PointSet(tuple(((x, y), a) for x, y, a in need("points")))
        if kind == "rects":
            return RectApertures(tuple(RectAperture((cx, cy), w, h, t) for cx, cy, w, h, t in need("rects")))
        if kind == "sampled":
            path = Path(need("file"))
            if not path.is_absolute():
                path = self.base_dir / path
            try:
                return SampledMap.read(path)
            except OSError as exc:
                raise ConfigError(f"cannot read sampled map {path}: {exc}") from None
        raise ConfigError(f"[object] kind must be one of {OBJECT_KINDS}, got {kind!r}")

    def is_symmetric_pair(self) -> bool:
        return self.get("object", "kind") in ("point_pair", "aperture_pair")

    # -- serialization ---------------------------------------------------------

    def dump(self) -> str:
        """Normalized text form (SI units, fixed section and key order)."""
        out = []
        for section, keys in SCHEMA.items():
            values = self.sections.get(section)
            if values is None:
                continue
            out.append(f"[{section}]")
            for key, (kind, _) in keys.items():
                if key not in values:
                    continue
                if section == "sweep" and key in ("values", "series_values"):
                    axis = values["axis"] if key == "values" else values["series_axis"]
                    fmt = _TYPES["lengths" if axis in LENGTH_AXES else "floats"][1]
                    out.append(f"{key} = {fmt(values[key])}")
                else:
                    out.append(f"{key} = {_TYPES[kind][1](values[key])}")
            out.append("")
        return "\n".join(out)

    def to_dict(self) -> dict:
        """JSON-friendly SI echo of every resolved parameter."""
        result = {}
        for section, keys in SCHEMA.items():
            if section not in self.sections:
                continue
            block = {}
            for key in keys:
                if key in self.sections[section]:
                    block[key] = _jsonable(self.sections[section][key])
            result[section] = block
        return result
