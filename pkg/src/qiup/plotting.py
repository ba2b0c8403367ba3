"""Matplotlib figures written next to the CSV/PGM outputs of the CLI."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

UM = 1e6
MM = 1e3

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 9,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "lines.linewidth": 1.5,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    # keeps PNG bytes stable between runs
    "svg.hashsalt": "qiup",
}


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def psf_cuts(path, x, curves: dict):
    """PSF cuts G(x_c, 0) for several crystal lengths (label -> values)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        for (label, y), ls in zip(curves.items(), ("-", "--", "-.", ":") * 4):
            ax.plot(np.asarray(x) * UM, y, ls, label=label)
        ax.set_xlabel(r"$x_c$ ($\mu$m)")
        ax.set_ylabel("PSF")
        ax.set_ylim(0, 1.05)
        ax.legend(frameon=False)
        _save(fig, path)


def spread_vs_length(path, lengths, spreads):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        ax.plot(np.asarray(lengths) * MM, np.asarray(spreads) * UM, "-")
        ax.set_xlabel("crystal length L (mm)")
        ax.set_ylabel(r"PSF spread $\Delta$ ($\mu$m)")
        _save(fig, path)


def raster(path, image, grid, title=None):
    """Peak-normalized camera image with +y upward."""
    half_x = grid.pitch * grid.nx / 2.0
    half_y = grid.pitch * grid.ny / 2.0
    extent = [
        (grid.center.x - half_x) * UM,
        (grid.center.x + half_x) * UM,
        (grid.center.y - half_y) * UM,
        (grid.center.y + half_y) * UM,
    ]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.6))
        im = ax.imshow(image, origin="lower", extent=extent, cmap="gray", vmin=0, vmax=1)
        ax.set_xlabel(r"$x_c$ ($\mu$m)")
        ax.set_ylabel(r"$y_c$ ($\mu$m)")
        if title:
            ax.set_title(title)
        fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
        _save(fig, path)


def profile(path, x, values, title=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        ax.plot(np.asarray(x) * UM, values, "-")
        ax.set_xlabel(r"$x_c$ ($\mu$m)")
        ax.set_ylabel(r"$G(x_c, 0)$")
        if title:
            ax.set_title(title)
        _save(fig, path)


def dmin_sweep(path, axis_label, scale, series: dict):
    """d_min curves; ``series`` maps label -> (axis values, analytic, numeric or None)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        for i, (label, (xv, analytic, numeric)) in enumerate(series.items()):
            color = f"C{i}"
            ax.plot(np.asarray(xv) * scale, np.asarray(analytic) * UM, "-", color=color, label=label)
            if numeric is not None:
                ax.plot(np.asarray(xv) * scale, np.asarray(numeric) * UM, "o", color=color, ms=4)
        ax.set_xlabel(axis_label)
        ax.set_ylabel(r"$d_{\min}$ ($\mu$m)")
        ax.legend(frameon=False)
        _save(fig, path)
