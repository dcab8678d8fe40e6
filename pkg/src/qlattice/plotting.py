"""Static matplotlib figures for scans, regimes and comparisons.

Figures are built on :class:`matplotlib.figure.Figure` directly, so nothing
here touches pyplot state or needs a display.  :func:`save_figure` picks the
file format from the suffix and strips timestamps so repeated runs write
identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

__all__ = [
    "FIGURE_FORMATS",
    "band_diagram",
    "comparison_plot",
    "regime_plot",
    "save_figure",
    "trace_plot",
]

FIGURE_FORMATS = ("png", "pdf", "svg")

_KIND_COLOURS = {
    "even": "tab:blue",
    "odd": "tab:orange",
    "flat": "tab:red",
    "negative": "tab:purple",
    "unclassified": "tab:gray",
}


def _new_axes(figsize=(7.0, 4.0)):
    fig = Figure(figsize=figsize, layout="constrained")
    return fig, fig.add_subplot()


def band_diagram(report, title: str | None = None) -> Figure:
    """Bands on the energy axis, one row per kind, flat bands as ticks."""
    fig, ax = _new_axes((7.0, 3.0))
    bands = list(report.negative_bands) + list(report.bands)
    kinds = [k for k in _KIND_COLOURS if any(b.kind == k for b in bands)]
    rows = {k: i for i, k in enumerate(kinds)}
    for b in bands:
        y = rows[b.kind]
        colour = _KIND_COLOURS.get(b.kind, "tab:gray")
        if b.width > 0:
            ax.broken_barh([(b.e_lo, b.width)], (y - 0.35, 0.7), facecolors=colour)
        else:
            ax.vlines(b.e_lo, y - 0.4, y + 0.4, colors=colour, linewidth=1.5)
    ax.set_yticks(range(len(kinds)), kinds)
    ax.set_ylim(-0.6, max(len(kinds), 1) - 0.4)
    lo = min([b.e_lo for b in bands] + [0.0])
    hi = report.e_max if math.isfinite(report.e_max) else max([b.e_hi for b in bands] + [1.0])
    ax.set_xlim(lo, hi)
    ax.set_xlabel("energy E")
    ax.set_title(title or "spectral bands")
    return fig


def trace_plot(k, f_min, f_max, title: str | None = None) -> Figure:
    """Torus minimum and maximum of the determinant along the momentum line.

    ``k`` lies in the spectrum where the two curves straddle zero; those
    stretches are shaded.
    """
    k = np.asarray(k, dtype=float)
    f_min = np.asarray(f_min, dtype=float)
    f_max = np.asarray(f_max, dtype=float)
    fig, ax = _new_axes()
    scale = np.maximum(np.maximum(np.abs(f_min), np.abs(f_max)), np.finfo(float).tiny)
    lo, hi = f_min / scale, f_max / scale
    ax.plot(k, lo, lw=0.8, color="tab:blue", label="min over torus")
    ax.plot(k, hi, lw=0.8, color="tab:orange", label="max over torus")
    ax.fill_between(k, -1.05, 1.05, where=(lo <= 0) & (hi >= 0), color="0.85", lw=0,
                    label="spectrum")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_ylim(-1.05, 1.05)
    ax.set_xlabel("momentum k")
    ax.set_ylabel("normalised determinant")
    ax.legend(loc="lower right", fontsize="small")
    ax.set_title(title or "determinant extrema along k")
    return fig


def regime_plot(report, n_range=(1, 40), title: str | None = None) -> Figure:
    """Predicted widths of every regime that carries a width constant."""
    fig, ax = _new_axes()
    n = np.arange(int(n_range[0]), int(n_range[1]) + 1)
    drawn = 0
    for r in report.regimes:
        if r.coefficient is None or r.band_law in ("flat", "collapsed-point", "full-line"):
            continue
        w = np.array([r.width(int(i)) for i in n])
        if not np.all(w > 0):
            continue
        ax.loglog(n + r.shift, w, marker=".", lw=0.8,
                  label=f"{r.anchor} {r.measure}s {r.band_law if r.measure == 'band' else r.gap_law}")
        drawn += 1
    if drawn:
        ax.legend(fontsize="small")
    else:
        ax.text(0.5, 0.5, "no regime with a finite width law", transform=ax.transAxes,
                ha="center", va="center")
    ax.set_xlabel("band index n")
    ax.set_ylabel("predicted width")
    ax.set_title(title or "high-energy width laws")
    return fig


def comparison_plot(comp, title: str | None = None) -> Figure:
    """Numeric against predicted widths on log-log axes."""
    fig, ax = _new_axes()
    r = comp.regime
    rows = [row for row in comp.rows if row["numeric"] is not None and row["numeric"] > 0]
    if rows:
        x = np.array([row["n"] + r.shift for row in rows])
        ax.loglog(x, [row["numeric"] for row in rows], "o", ms=4, label="scan")
    pred = [row for row in comp.rows if row["predicted"] is not None and row["predicted"] > 0
            and math.isfinite(row["predicted"])]
    if pred:
        x = np.array([row["n"] + r.shift for row in pred])
        ax.loglog(x, [row["predicted"] for row in pred], "-", lw=1.0, label="leading term")
    fit = "n/a" if comp.fitted_exponent is None else f"{comp.fitted_exponent:.3f}"
    ax.set_xlabel("band index n" + (" + 1/2" if r.shift else ""))
    ax.set_ylabel(f"{r.measure} width")
    ax.set_title(title or f"{r.case}\nfitted exponent {fit}", fontsize="small")
    if rows or pred:
        ax.legend(fontsize="small")
    return fig


def save_figure(fig: Figure, path) -> Path:
    """Write ``fig`` in the format named by the suffix of ``path``."""
    path = Path(path)
    fmt = path.suffix.lower().lstrip(".")
    if fmt not in FIGURE_FORMATS:
        raise ValueError(f"unsupported figure format {fmt!r}; use one of {FIGURE_FORMATS}")
    # fixed metadata keeps the output reproducible
    meta = {"png": {"Software": None}, "pdf": {"CreationDate": None, "Producer": None},
            "svg": {"Date": None}}[fmt]
    kwargs = {"metadata": meta}
    if fmt == "svg":
        import matplotlib
        with matplotlib.rc_context({"svg.hashsalt": "qlattice"}):
            fig.savefig(path, format=fmt, **kwargs)
    else:
        fig.savefig(path, format=fmt, dpi=150, **kwargs)
    return path
