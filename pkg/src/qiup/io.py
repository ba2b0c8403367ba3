"""Output formats: 16-bit PGM rasters, CSV tables and JSON reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__

SCHEMA_VERSION = 1
PGM_MAXVAL = 65535


def to_pgm_samples(normalized: np.ndarray) -> np.ndarray:
    """Quantize a peak-normalized field to 16-bit samples, round(65535 * v)."""
    v = np.asarray(normalized, float)
    if np.any(v < 0) or np.any(v > 1 + 1e-12):
        raise ValueError("PGM export needs values in [0, 1]")
    return np.rint(np.clip(v, 0.0, 1.0) * PGM_MAXVAL).astype(np.uint16)


def write_pgm(path, normalized: np.ndarray) -> None:
    """Binary P5 PGM, 16-bit big-endian, row-major.

    ``normalized[j, i]`` has rows running along increasing y; the file stores
    the top (largest y) row first so that viewers show +y upward.
    """
    samples = to_pgm_samples(normalized)[::-1]
    ny, nx = samples.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n{PGM_MAXVAL}\n".encode("ascii"))
        fh.write(samples.astype(">u2").tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a 16-bit P5 file back into an array with rows along increasing y."""
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    if tokens[0] != "P5":
        raise ValueError(f"{path}: not a binary PGM")
    nx, ny, maxval = map(int, tokens[1:])
    if maxval != PGM_MAXVAL:
        raise ValueError(f"{path}: expected maxval {PGM_MAXVAL}, got {maxval}")
    pixels = np.frombuffer(data[pos + 1 :], dtype=">u2", count=nx * ny).reshape(ny, nx)
    return pixels[::-1].astype(np.uint16)


def write_csv(path, columns: Sequence[str], rows) -> None:
    """CSV with unit-annotated header and 9 significant digits."""
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt_cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    return f"{float(v):.9g}"


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a CSV written by :func:`write_csv`."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [[float(c) if c else np.nan for c in line.split(",")] for line in lines[1:]]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


@dataclass
class Report:
    """Machine-readable run summary.

    Every scalar output is stored as ``{"value": ..., "unit": ...}``; keys
    keep insertion order so identical runs serialize identically.
    """

    command: str
    inputs: dict
    outputs: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def add(self, name: str, value: Any, unit: str) -> None:
        if isinstance(value, (np.floating, np.integer)):
            value = value.item()
        self.outputs[name] = {"value": value, "unit": unit}

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool": "qiup",
            "version": __version__,
            "command": self.command,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "warnings": list(self.warnings),
            "files": list(self.files),
        }

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n")
