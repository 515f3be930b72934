"""Matplotlib figures for the standard smFRET plot types.

Figures are built on bare ``Figure`` objects (no pyplot state) and saved
without software/date metadata so repeated runs give identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib import rc_context
from matplotlib.figure import Figure

STYLE = {
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.linewidth": 0.8,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "xtick.top": True,
    "ytick.right": True,
    "legend.frameon": False,
    "savefig.dpi": 100,
    "path.simplify": False,
}

BAR_COLOR = "#7da7d9"
FIT_COLOR = "#c0392b"


def _save(fig: Figure, path) -> None:
    fmt = str(path).rsplit(".", 1)[-1].lower()
    meta = {"Software": None} if fmt == "png" else {"Creator": None, "Date": None}
    if fmt == "svg":
        with rc_context({"svg.hashsalt": "smfret"}):
            fig.savefig(path, metadata=meta)
    else:
        fig.savefig(path, metadata=meta)


def plot_histogram(hist, path, title: str | None = None) -> None:
    """Efficiency histogram with the fitted Gaussian overlaid."""
    with rc_context(STYLE):
        fig = Figure(figsize=(5, 3.5))
        ax = fig.add_subplot()
        edges = hist.edges
        ax.bar(edges[:-1], hist.counts, width=np.diff(edges), align="edge",
               color=BAR_COLOR, edgecolor="#3b6ea5", linewidth=0.4)
        if hist.fit is not None:
            xs = np.linspace(hist.bin_min, hist.bin_max, 256)
            f = hist.fit
            ax.plot(xs, f(xs), color=FIT_COLOR,
                    label=f"mean {f.mean:.3f}, sd {f.sigma:.3f}")
            ax.legend(loc="upper left")
        ax.set_xlim(hist.bin_min, hist.bin_max)
        ax.set_xlabel("FRET Efficiency")
        ax.set_ylabel("Events")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)


def plot_es_scatter(e, s, path, bins: int = 50) -> None:
    """E-S scatter with projected histograms on the top and right margins."""
    e = np.asarray(e, dtype=float)
    s = np.asarray(s, dtype=float)
    with rc_context(STYLE):
        fig = Figure(figsize=(5, 5))
        gs = fig.add_gridspec(2, 2, width_ratios=(4, 1), height_ratios=(1, 4),
                              wspace=0.05, hspace=0.05)
        ax = fig.add_subplot(gs[1, 0])
        top = fig.add_subplot(gs[0, 0], sharex=ax)
        side = fig.add_subplot(gs[1, 1], sharey=ax)
        ax.scatter(e, s, s=4, color="#34495e", alpha=0.5, linewidths=0)
        edges = np.linspace(0, 1, bins + 1)
        top.hist(e, bins=edges, color=BAR_COLOR)
        side.hist(s, bins=edges, color=BAR_COLOR, orientation="horizontal")
        top.tick_params(labelbottom=False)
        side.tick_params(labelleft=False)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_xlabel("FRET Efficiency")
        ax.set_ylabel("Stoichiometry")
        _save(fig, path)


def plot_frequency_heatmap(d_edges, a_edges, counts, path) -> None:
    """Event frequencies over donor and acceptor photon counts."""
    with rc_context(STYLE):
        fig = Figure(figsize=(5, 4))
        ax = fig.add_subplot()
        mesh = ax.pcolormesh(d_edges, a_edges, np.asarray(counts).T, cmap="viridis")
        fig.colorbar(mesh, ax=ax, label="Events")
        ax.set_xlabel("Donor photons")
        ax.set_ylabel("Acceptor photons")
        fig.tight_layout()
        _save(fig, path)


def plot_frequency_3d(d_edges, a_edges, counts, path) -> None:
    """The same event frequencies as 3-D bars."""
    counts = np.asarray(counts, dtype=float)
    dc = d_edges[:-1]
    ac = a_edges[:-1]
    dx = np.diff(d_edges)[0]
    dy = np.diff(a_edges)[0]
    xx, yy = np.meshgrid(dc, ac, indexing="ij")
    with rc_context(STYLE):
        fig = Figure(figsize=(5, 4))
        ax = fig.add_subplot(projection="3d")
        ax.bar3d(xx.ravel(), yy.ravel(), np.zeros(xx.size), dx, dy, counts.ravel(),
                 color=BAR_COLOR, shade=True)
        ax.set_xlabel("Donor photons")
        ax.set_ylabel("Acceptor photons")
        ax.set_zlabel("Events")
        _save(fig, path)


def plot_forster_curve(points, fit, path) -> None:
    """Measured (r, E) points and the fitted sigmoid."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    r = pts[:, 0]
    grid = np.linspace(0.5 * r.min(), 1.5 * r.max(), 256)
    with rc_context(STYLE):
        fig = Figure(figsize=(5, 3.5))
        ax = fig.add_subplot()
        ax.plot(grid, fit(grid), color=FIT_COLOR, label=f"R0 = {fit.r0:.3f}")
        ax.plot(r, pts[:, 1], "o", color="#34495e")
        ax.axhline(0.5, color="0.7", linewidth=0.6, linestyle="--")
        ax.set_ylim(-0.05, 1.05)
        ax.set_xlabel("Dye separation")
        ax.set_ylabel("FRET Efficiency")
        ax.legend(loc="upper right")
        fig.tight_layout()
        _save(fig, path)
