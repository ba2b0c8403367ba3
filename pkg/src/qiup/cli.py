"""Command-line front end.

    qiup psf     --config run.cfg --out results/
    qiup image   --config run.cfg --out results/ [--phi 0.0] [--full-kernel]
    qiup resolve --config run.cfg --out results/
    qiup sweep   --config run.cfg --out results/ [--jobs 4]

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io, plotting
from .config import LENGTH_AXES, RunConfig
from .errors import ConfigError, InvalidParameterError, NumericalError, ReducedKernelWarning
from .imaging import (
    OpticsParams,
    PointSet,
    count_rate,
    evaluate_count_rate,
    evaluate_image,
    image_function,
    point_pair,
    render,
    square_aperture_pair,
)
from .kernel import VALIDITY_THRESHOLD, reduced_kernel_validity
from .resolution import (
    ResolutionCriterion,
    beta,
    d_min_analytic,
    d_min_farfield,
    d_min_numeric,
    object_profile,
    psf_spread,
    psf_spread_object_plane,
    separation_parameter,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_AXIS_UNITS = {"crystal_length": "m", "lambda_s": "m", "lambda_i": "m", "m_i": "1", "beta_max": "1"}


def _validity(cfg, report, kernel):
    ratio = reduced_kernel_validity(cfg.spdc())
    report.add("reduced_kernel_validity", ratio, "1")
    report.add("reduced_kernel_validity_threshold", VALIDITY_THRESHOLD, "1")
    if kernel == "reduced" and ratio > VALIDITY_THRESHOLD:
        report.warnings.append(
            f"reduced kernel validity ratio {ratio:.3g} exceeds {VALIDITY_THRESHOLD}; consider --full-kernel"
        )


def _inputs(cfg, kernel, **extra):
    inputs = cfg.to_dict()
    inputs["kernel"] = kernel
    inputs.update(extra)
    return inputs


def _fmt_len(v):
    return f"{v:.6g} m"


# -- commands --------------------------------------------------------------------


def cmd_psf(cfg: RunConfig, out: Path, kernel: str = "reduced", figures: bool = True) -> io.Report:
    """PSF raster and cut, spread values, and spread-vs-crystal-length table."""
    p, o, cam = cfg.spdc(), cfg.optics(), cfg.camera()
    report = io.Report("psf", _inputs(cfg, kernel))
    point = PointSet((((0.0, 0.0), 1.0),))

    img = image_function(p, o, point, cam, kernel)
    normalized = render(img, "peak-normalized")
    io.write_pgm(out / "psf.pgm", normalized)
    report.files.append("psf.pgm")

    overlay = cfg.get("psf", "overlay_lengths") or [p.crystal_length]
    cuts = {}
    for length in overlay:
        q = replace(p, crystal_length=length)
        g = evaluate_image(q, o, point, cam.x, [0.0], kernel)[0]
        cuts[length] = g / np.max(g)
    io.write_csv(
        out / "psf_cut.csv",
        ["x_c [m]"] + [f"psf L={_fmt_len(L)} [1]" for L in overlay],
        zip(cam.x, *cuts.values()),
    )
    report.files.append("psf_cut.csv")

    lengths = cfg.get("psf", "spread_lengths") or [k * 0.5e-3 for k in range(1, 21)]
    spreads = [psf_spread(replace(p, crystal_length=L), o.m_s) for L in lengths]
    io.write_csv(
        out / "spread_vs_length.csv",
        ["L [m]", "spread [m]", "spread_object_plane [m]"],
        [(L, s, psf_spread_object_plane(replace(p, crystal_length=L), o.m_i)) for L, s in zip(lengths, spreads)],
    )
    report.files.append("spread_vs_length.csv")

    report.add("psf_spread", psf_spread(p, o.m_s), "m")
    report.add("psf_spread_object_plane", psf_spread_object_plane(p, o.m_i), "m")
    report.add("magnification", o.magnification, "1")
    for L in overlay:
        report.add(f"psf_spread[L={_fmt_len(L)}]", psf_spread(replace(p, crystal_length=L), o.m_s), "m")
    report.add("raster_peak_normalized_max", float(np.max(normalized)), "1")
    _validity(cfg, report, kernel)

    if figures:
        plotting.psf_cuts(out / "psf_cut.png", cam.x, {f"L = {L * 1e3:g} mm": c for L, c in cuts.items()})
        plotting.spread_vs_length(out / "spread_vs_length.png", lengths, spreads)
        plotting.raster(out / "psf.png", normalized, cam, "PSF")
        report.files += ["psf_cut.png", "spread_vs_length.png", "psf.png"]
    return report


def cmd_image(
    cfg: RunConfig, out: Path, kernel: str = "reduced", phi=None, figures: bool = True
) -> io.Report:
    """Image function (or raw count rate at ``phi``) of the configured object."""
    p, o, cam = cfg.spdc(), cfg.optics(), cfg.camera()
    obj = cfg.scene_object()
    report = io.Report("image", _inputs(cfg, kernel, phi=phi if phi is not None else "subtraction"))

    if phi is None:
        result = image_function(p, o, obj, cam, kernel)
        cut = evaluate_image(p, o, obj, cam.x, [0.0], kernel)[0]
        quantity = "image_function"
    else:
        o = o.with_phase(phi)
        result = count_rate(p, o, obj, cam, kernel)
        cut = evaluate_count_rate(p, o, obj, cam.x, [0.0], kernel)[0]
        quantity = "count_rate"
    report.add("quantity", quantity, "")

    peak = float(np.max(result.values))
    if peak > 0:
        normalized = render(result, "peak-normalized")
    else:
        normalized = np.zeros_like(result.values)
        report.warnings.append("image is identically zero; raster written as all-zero")
    io.write_pgm(out / "image.pgm", normalized)
    cut_norm = cut / peak if peak > 0 else np.zeros_like(cut)
    io.write_csv(
        out / "image_cut.csv",
        ["x_c [m]", f"{quantity} [arb]", f"{quantity}_peak_normalized [1]"],
        zip(cam.x, cut, cut_norm),
    )
    report.files += ["image.pgm", "image_cut.csv"]

    report.add("peak_value", peak, "arb")
    ripple = (peak - float(np.min(result.values))) / peak if peak > 0 else 0.0
    report.add("relative_ripple", ripple, "1")

    if cfg.is_symmetric_pair():
        d = cfg.get("object", "separation")
        b = beta(object_profile(p, o, obj, d, kernel))
        report.add("separation", d, "m")
        report.add("s_parameter", separation_parameter(p, o.m_i, d), "1")
        report.add("beta", b, "1")
    _validity(cfg, report, kernel)

    if figures:
        plotting.raster(out / "image.png", normalized, cam, quantity.replace("_", " "))
        plotting.profile(out / "image_cut.png", cam.x, cut_norm)
        report.files += ["image.png", "image_cut.png"]
    return report


def _template(side):
    if side is None:
        return point_pair
    return lambda d: square_aperture_pair(d, side)


def cmd_resolve(cfg: RunConfig, out: Path, kernel: str = "reduced") -> io.Report:
    """Criterion constants, analytic and (optionally) simulated d_min, far-field comparator."""
    p, o = cfg.spdc(), cfg.optics()
    crit = ResolutionCriterion.from_beta_max(cfg.beta_max)
    report = io.Report("resolve", _inputs(cfg, kernel))
    report.add("beta_max", crit.beta_max, "1")
    report.add("m0", crit.m0, "1")
    report.add("n", crit.n, "1")
    report.add("exp_minus_m0", math.exp(-crit.m0), "1")
    report.add("dip_value_at_d_min", 2.0 * math.exp(-crit.m0 / 4.0), "1")
    report.add("psf_spread_object_plane", psf_spread_object_plane(p, o.m_i), "m")
    report.add("d_min_analytic", d_min_analytic(p, o.m_i, crit), "m")
    if cfg.get("resolve", "numeric"):
        side = cfg.get("resolve", "aperture_side")
        report.add("d_min_numeric", d_min_numeric(p, o, _template(side), crit, kernel), "m")
        report.add("d_min_numeric_object", "point_pair" if side is None else f"square_aperture_pair side={side!r} m", "")
    if "farfield" in cfg.sections and cfg.get("farfield", "f_i") is not None:
        w_p = cfg.get("farfield", "w_p") or p.pump_waist
        report.add("farfield_f_i", cfg.get("farfield", "f_i"), "m")
        report.add("farfield_w_p", w_p, "m")
        report.add("d_min_farfield", d_min_farfield(cfg.get("farfield", "f_i"), p.lambda_i, w_p), "m")
    _validity(cfg, report, kernel)
    return report


def _apply(p, o, beta_max, axis, value):
    if axis in LENGTH_AXES:
        return replace(p, **{axis: value}), o, beta_max
    if axis == "m_i":
        return p, OpticsParams(o.m_s, value, o.phi_in), beta_max
    return p, o, value


def _sweep_point(args):
    p, o, beta_max, numeric, side, kernel = args
    crit = ResolutionCriterion.from_beta_max(beta_max)
    analytic = d_min_analytic(p, o.m_i, crit)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReducedKernelWarning)
        num = d_min_numeric(p, o, _template(side), crit, kernel) if numeric else None
    return analytic, num


def cmd_sweep(
    cfg: RunConfig, out: Path, kernel: str = "reduced", figures: bool = True, jobs=None
) -> io.Report:
    """d_min over one parameter axis, optionally for several values of a second axis."""
    if "sweep" not in cfg.sections:
        raise ConfigError("sweep needs a [sweep] block")
    sw = cfg.sections["sweep"]
    axis, values = sw["axis"], sw["values"]
    series_axis = sw.get("series_axis")
    series_values = sw.get("series_values") or [None]
    numeric, side = sw.get("numeric", False), sw.get("aperture_side")
    jobs = jobs or sw.get("jobs", 1)
    report = io.Report("sweep", _inputs(cfg, kernel))

    base_p, base_o = cfg.spdc(), cfg.optics()
    tasks, keys = [], []
    for sv in series_values:
        p, o, bm = base_p, base_o, cfg.beta_max
        if series_axis is not None:
            p, o, bm = _apply(p, o, bm, series_axis, sv)
        for v in values:
            pp, oo, bb = _apply(p, o, bm, axis, v)
            tasks.append((pp, oo, bb, numeric, side, kernel))
            keys.append((sv, v))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]

    columns = [f"{axis} [{_AXIS_UNITS[axis]}]"]
    if series_axis is not None:
        columns.append(f"{series_axis} [{_AXIS_UNITS[series_axis]}]")
    columns += ["d_min_analytic [m]", "d_min_numeric [m]", "relative_difference [1]"]
    rows, worst = [], 0.0
    for (sv, v), (a, num) in zip(keys, results):
        rel = (num - a) / a if num is not None else None
        if rel is not None:
            worst = max(worst, abs(rel))
        row = [v] + ([sv] if series_axis is not None else []) + [a, num, rel]
        rows.append(row)
    io.write_csv(out / "sweep.csv", columns, rows)
    report.files.append("sweep.csv")
    report.add("points", len(rows), "1")
    if numeric:
        report.add("max_relative_difference", worst, "1")
    _validity(cfg, report, kernel)

    if figures:
        scale, label = (1e3, f"{axis} (mm)") if axis == "crystal_length" else (1.0, axis)
        if axis in ("lambda_s", "lambda_i"):
            scale, label = 1e9, f"{axis} (nm)"
        series = {}
        for sv in series_values:
            sel = [r for r, (k, _) in zip(rows, keys) if k == sv]
            name = f"{series_axis} = {sv:g}" if series_axis else "d_min"
            a_col = 2 if series_axis else 1
            series[name] = (
                [r[0] for r in sel],
                [r[a_col] for r in sel],
                [r[a_col + 1] for r in sel] if numeric else None,
            )
        plotting.dmin_sweep(out / "sweep.png", label, scale, series)
        report.files.append("sweep.png")
    return report


COMMANDS = {"psf": cmd_psf, "image": cmd_image, "resolve": cmd_resolve, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qiup", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__.splitlines()[0])
        sp.add_argument("--config", required=True, help="run configuration file")
        sp.add_argument("--out", default=".", help="output directory (created if missing)")
        sp.add_argument(
            "--override", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config value"
        )
        sp.add_argument("--full-kernel", action="store_true", help="image with the full joint density")
        sp.add_argument("--no-figures", action="store_true", help="skip PNG figures")
        if name == "image":
            sp.add_argument("--phi", type=float, default=None, help="raw count rate at this phase (rad)")
        if name == "sweep":
            sp.add_argument("--jobs", type=int, default=None, help="worker processes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kernel = "full" if args.full_kernel else "reduced"
    try:
        cfg = RunConfig.load(args.config, overrides=args.override)
    except ConfigError as exc:
        print(f"qiup: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"qiup: cannot create output directory {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    kwargs = {"kernel": kernel}
    if args.command != "resolve":
        kwargs["figures"] = not args.no_figures
    if args.command == "image":
        kwargs["phi"] = args.phi
    if args.command == "sweep":
        kwargs["jobs"] = args.jobs
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ReducedKernelWarning)
            report = COMMANDS[args.command](cfg, out, **kwargs)
        report.write(out / f"{args.command}_report.json")
    except (ConfigError, InvalidParameterError) as exc:
        print(f"qiup: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"qiup: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"qiup: cannot write outputs to {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name, entry in report.outputs.items():
        unit = f" {entry['unit']}" if entry["unit"] not in ("", "1") else ""
        print(f"{name} = {entry['value']}{unit}")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
