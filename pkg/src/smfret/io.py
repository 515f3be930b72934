"""Reading binned photon data and configuration files; writing result tables
and the SVG histogram.

Input CSV files hold one time bin per row: ``donor,acceptor`` for FRET data
or ``d_d,d_a,a_d,a_a`` for ALEX data. An optional first header row is
recognised by containing a non-numeric cell; blank lines are ignored.

Configuration files are ``key = value`` lines with ``#`` comments.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .analysis import EfficiencyHistogram, burst_stoichiometries, _bin_count
from .errors import (
    BadBinning,
    FileNotFound,
    MalformedRow,
    MissingRequiredKey,
    MixedMode,
    UnknownKey,
    ValueOutOfDomain,
    WriteFailed,
)
from .model import ALEX_CHANNELS, AlexTrace, BurstSet, CorrectionParams, FretTrace, step
from .simulate import SimParams

log = logging.getLogger(__name__)

MODES = {"fret": 2, "alex": 4}
THRESHOLD_MODES = ("and", "or", "sum", "alex")


def fmt(x) -> str:
    """Render a number with 12 significant digits (integers verbatim)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.12g" % x


def _fmt_count(x: float) -> str:
    # lossless: integral counts as integers, anything else as shortest repr
    if float(x).is_integer() and abs(x) < 2 ** 53:
        return str(int(x))
    return repr(float(x))


# ---------------------------------------------------------------------------
# data files
# ---------------------------------------------------------------------------

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_numeric_rows(path, ncols: int, mode: Optional[str] = None) -> np.ndarray:
    """Parse a comma-separated numeric file into an ``(n, ncols)`` array.

    Raises
    ------
    FileNotFound
    MixedMode
        ``mode`` is given and the first data row has the column count of
        the other acquisition mode.
    MalformedRow
        Any other wrong column count or unparseable cell.
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        raise FileNotFound(f"no such file: {path}") from None
    except IsADirectoryError:
        raise FileNotFound(f"not a file: {path}") from None
    rows, linenos = [], []
    header_allowed = first = True
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if header_allowed:
            header_allowed = False
            if not all(_is_number(c) for c in cells):
                continue  # header
        if first:
            first = False
            if mode is not None and len(cells) != ncols:
                other = [m for m, n in MODES.items() if n == len(cells) and m != mode]
                if other:
                    raise MixedMode(f"{len(cells)} columns look like {other[0]} data, "
                                    f"expected {ncols} for {mode} mode", path, lineno)
        if len(cells) != ncols:
            raise MalformedRow(f"expected {ncols} columns, found {len(cells)}", path, lineno)
        try:
            rows.append(list(map(float, cells)))
        except ValueError:
            raise MalformedRow(f"non-numeric cell in {line!r}", path, lineno) from None
        linenos.append(lineno)
    data = np.array(rows, dtype=float).reshape(-1, ncols)
    bad = ~(np.isfinite(data) & (data >= 0)).all(axis=1)
    if bad.any():
        i = int(np.argmax(bad))
        raise MalformedRow(f"counts must be finite and >= 0: {lines[linenos[i] - 1]!r}",
                           path, linenos[i])
    return data


def parse_csv(directory, files: Sequence[str], mode: str = "fret",
              bin_width_ms: float = 1.0):
    """Read and concatenate binned data files in list order.

    Parameters
    ----------
    directory : path
        Directory the file names are relative to.
    files : list of str
    mode : {'fret', 'alex'}

    Returns
    -------
    FretTrace or AlexTrace
    """
    if mode not in MODES:
        raise ValueOutOfDomain(f"unknown mode {mode!r}")
    ncols = MODES[mode]
    paths = [Path(directory) / f for f in files]
    if len(paths) > 1:
        with ThreadPoolExecutor(max_workers=min(8, len(paths))) as pool:
            parts = list(pool.map(lambda p: read_numeric_rows(p, ncols, mode), paths))
    else:
        parts = [read_numeric_rows(p, ncols, mode) for p in paths]
    data = np.concatenate(parts) if parts else np.empty((0, ncols))
    if data.size and not np.all(data == np.round(data)):
        log.warning("input counts are not all integers; continuing with real values")
    history = (step("parse_csv", files=tuple(str(p) for p in paths), mode=mode),)
    if mode == "fret":
        return FretTrace(data[:, 0], data[:, 1], bin_width_ms, history)
    return AlexTrace(*(data[:, i] for i in range(4)), bin_width_ms=bin_width_ms, history=history)


def _open_for_write(path):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise WriteFailed(f"cannot write {path}: {exc}") from exc


def _write_lines(path, lines):
    fh = _open_for_write(path)
    try:
        with fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise WriteFailed(f"cannot write {path}: {exc}") from exc


def write_trace_csv(trace, path) -> None:
    """Write a trace in the input format (with header) so it can be re-read."""
    if isinstance(trace, AlexTrace):
        header = ",".join(ALEX_CHANNELS)
        cols = [getattr(trace, n) for n in ALEX_CHANNELS]
    else:
        header = "donor,acceptor"
        cols = [trace.donor, trace.acceptor]
    _write_lines(path, [header] + _rows_text(np.column_stack(cols)))


def _rows_text(table: np.ndarray) -> list:
    if np.all(np.mod(table, 1) == 0) and np.all(np.abs(table) < 2 ** 53):
        # fast path for integer counts: Python ints print verbatim
        return [",".join(map(str, row)) for row in table.astype(np.int64).tolist()]
    return [",".join(_fmt_count(v) for v in row) for row in table.tolist()]


def write_ground_truth_csv(truth, path) -> None:
    cols = ["bin", "species", "n_total", "n_donor", "n_acceptor"]
    arrays = [np.arange(len(truth.species)), truth.species, truth.n_total,
              truth.n_donor, truth.n_acceptor]
    if truth.n_aa is not None:
        cols.append("n_aa")
        arrays.append(truth.n_aa)
    lines = [",".join(cols)]
    lines += [",".join(map(str, row)) for row in np.column_stack(arrays).astype(np.int64).tolist()]
    _write_lines(path, lines)


def read_points_csv(path) -> list:
    """``r,E`` pairs for distance fitting (header optional)."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        raise FileNotFound(f"no such file: {path}") from None
    points = []
    first = True
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if first:
            first = False
            if not all(_is_number(c) for c in cells):
                continue
        if len(cells) != 2:
            raise MalformedRow(f"expected 2 columns (r,E), found {len(cells)}", path, lineno)
        try:
            points.append((float(cells[0]), float(cells[1])))
        except ValueError:
            raise MalformedRow(f"non-numeric cell in {line!r}", path, lineno) from None
    return points


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def read_key_values(path) -> dict:
    """Parse ``key = value`` lines; returns ``{key: (value, lineno)}``."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        raise FileNotFound(f"no such config file: {path}") from None
    out = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueOutOfDomain(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ValueOutOfDomain(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = (value, lineno)
    return out


class _Reader:
    """Typed access to a key/value mapping with located error messages."""

    def __init__(self, path, entries: dict, allowed):
        self.path = path
        self.entries = entries
        unknown = sorted(set(entries) - set(allowed))
        if unknown:
            key = unknown[0]
            raise UnknownKey(f"{path}:{entries[key][1]}: unknown key {key!r}")

    def _where(self, key):
        return f"{self.path}:{self.entries[key][1]}"

    def has(self, key):
        return key in self.entries

    def require(self, key):
        if key not in self.entries:
            raise MissingRequiredKey(f"{self.path}: missing required key {key!r}")

    def real(self, key, default=None, lo=None, hi=None, lo_open=False, hi_open=False):
        if key not in self.entries:
            return default
        text = self.entries[key][0]
        try:
            value = float(text)
        except ValueError:
            raise ValueOutOfDomain(f"{self._where(key)}: {key} must be a number, got {text!r}") from None
        bad = (not math.isfinite(value)
               or (lo is not None and (value < lo or (lo_open and value == lo)))
               or (hi is not None and (value > hi or (hi_open and value == hi))))
        if bad:
            lb = "(" if lo_open else "["
            rb = ")" if hi_open else "]"
            rng = f"{lb}{'-inf' if lo is None else lo}, {'inf' if hi is None else hi}{rb}"
            raise ValueOutOfDomain(f"{self._where(key)}: {key} = {text} outside {rng}")
        return value

    def integer(self, key, default=None, lo=None):
        value = self.real(key, None, lo=lo)
        if value is None:
            return default
        if not value.is_integer():
            raise ValueOutOfDomain(f"{self._where(key)}: {key} must be an integer")
        return int(value)

    def choice(self, key, options, default):
        if key not in self.entries:
            return default
        value = self.entries[key][0].lower()
        if value not in options:
            raise ValueOutOfDomain(f"{self._where(key)}: {key} must be one of {', '.join(options)}")
        return value

    def text(self, key, default=None):
        return self.entries[key][0] if key in self.entries else default


@dataclass(frozen=True)
class RunConfig:
    t_donor: float
    t_acceptor: float
    input_files: tuple
    auto_donor: float = 0.0
    auto_acceptor: float = 0.0
    cross_DtoA: float = 0.0
    cross_AtoD: float = 0.0
    gamma: float = 1.0
    bin_min: float = 0.0
    bin_max: float = 1.0
    bin_width: float = 0.02
    mode: str = "fret"
    threshold_mode: str = "and"
    output_dir: str = "output"
    seed: Optional[int] = None
    base_dir: str = "."

    def correction_params(self) -> CorrectionParams:
        return CorrectionParams(self.auto_donor, self.auto_acceptor, self.cross_DtoA,
                                self.cross_AtoD, self.gamma, self.t_donor, self.t_acceptor)

    def resolved_output_dir(self) -> Path:
        return Path(self.base_dir) / self.output_dir


RUN_KEYS = ("auto_donor", "auto_acceptor", "t_donor", "t_acceptor", "cross_DtoA", "cross_AtoD",
            "gamma", "bin_min", "bin_max", "bin_width", "mode", "threshold_mode",
            "input_files", "output_dir", "seed")


def parse_config(path, default_mode: str = "fret") -> RunConfig:
    """Read an analysis configuration file.

    Relative ``input_files`` and ``output_dir`` are interpreted relative to
    the directory containing the config file. ``t_donor``, ``t_acceptor``
    and ``input_files`` are required; everything else has a default
    (corrections 0, gamma 1, bins 0 to 1 in steps of 0.02).
    """
    rd = _Reader(path, read_key_values(path), RUN_KEYS)
    for key in ("t_donor", "t_acceptor", "input_files"):
        rd.require(key)
    mode = rd.choice("mode", tuple(MODES), default_mode)
    threshold_mode = rd.choice("threshold_mode", THRESHOLD_MODES,
                               "alex" if mode == "alex" else "and")
    if (mode == "alex") != (threshold_mode == "alex"):
        raise ValueOutOfDomain(f"{path}: threshold_mode {threshold_mode!r} "
                               f"is not valid for mode {mode!r}")
    files = tuple(f.strip() for f in rd.text("input_files").split(",") if f.strip())
    if not files:
        raise ValueOutOfDomain(f"{path}: input_files is empty")
    cfg = RunConfig(
        t_donor=rd.real("t_donor", lo=0),
        t_acceptor=rd.real("t_acceptor", lo=0),
        input_files=files,
        auto_donor=rd.real("auto_donor", 0.0, lo=0),
        auto_acceptor=rd.real("auto_acceptor", 0.0, lo=0),
        cross_DtoA=rd.real("cross_DtoA", 0.0, lo=0, hi=1, hi_open=True),
        cross_AtoD=rd.real("cross_AtoD", 0.0, lo=0, hi=1, hi_open=True),
        gamma=rd.real("gamma", 1.0, lo=0, lo_open=True),
        bin_min=rd.real("bin_min", 0.0),
        bin_max=rd.real("bin_max", 1.0),
        bin_width=rd.real("bin_width", 0.02, lo=0, lo_open=True),
        mode=mode,
        threshold_mode=threshold_mode,
        output_dir=rd.text("output_dir", "output"),
        seed=rd.integer("seed"),
        base_dir=str(Path(path).resolve().parent),
    )
    try:
        _bin_count(cfg.bin_min, cfg.bin_max, cfg.bin_width)
    except BadBinning as exc:
        raise ValueOutOfDomain(f"{path}: {exc}") from None
    return cfg


@dataclass(frozen=True)
class SimConfig:
    params: SimParams
    mode: str = "fret"
    acceptor_brightness: Optional[float] = None
    donor_only_fraction: float = 0.0
    output_dir: str = "output"
    base_dir: str = "."

    def resolved_output_dir(self) -> Path:
        return Path(self.base_dir) / self.output_dir


SIM_KEYS = ("n_bins", "burst_rate", "burst_intensity_mean", "true_E", "background_d",
            "background_a", "cross_DtoA", "cross_AtoD", "gamma", "seed", "bin_width_ms",
            "mode", "acceptor_brightness", "donor_only_fraction", "output_dir")


def parse_sim_config(path) -> SimConfig:
    """Read a simulation configuration (``n_bins`` and ``seed`` required)."""
    rd = _Reader(path, read_key_values(path), SIM_KEYS)
    rd.require("n_bins")
    rd.require("seed")
    d = SimParams()
    params = SimParams(
        n_bins=rd.integer("n_bins", lo=1),
        burst_rate=rd.real("burst_rate", d.burst_rate, lo=0, hi=1),
        burst_intensity_mean=rd.real("burst_intensity_mean", d.burst_intensity_mean, lo=1),
        true_E=rd.real("true_E", d.true_E, lo=0, hi=1),
        background_d=rd.real("background_d", d.background_d, lo=0),
        background_a=rd.real("background_a", d.background_a, lo=0),
        cross_DtoA=rd.real("cross_DtoA", d.cross_DtoA, lo=0, hi=1, hi_open=True),
        cross_AtoD=rd.real("cross_AtoD", d.cross_AtoD, lo=0, hi=1, hi_open=True),
        gamma=rd.real("gamma", d.gamma, lo=0, lo_open=True),
        seed=rd.integer("seed"),
        bin_width_ms=rd.real("bin_width_ms", d.bin_width_ms, lo=0, lo_open=True),
    )
    return SimConfig(
        params=params,
        mode=rd.choice("mode", tuple(MODES), "fret"),
        acceptor_brightness=rd.real("acceptor_brightness", None, lo=0),
        donor_only_fraction=rd.real("donor_only_fraction", 0.0, lo=0, hi=1),
        output_dir=rd.text("output_dir", "output"),
        base_dir=str(Path(path).resolve().parent),
    )


# ---------------------------------------------------------------------------
# result writers
# ---------------------------------------------------------------------------

def write_histogram_csv(hist: EfficiencyHistogram, path) -> None:
    """``bin_center,count,fit`` rows; ``fit`` is empty without a Gaussian fit."""
    centers = hist.centers
    fitted = hist.fit(centers) if hist.fit is not None else None
    lines = ["bin_center,count,fit"]
    for k, (c, n) in enumerate(zip(centers, hist.counts)):
        f = fmt(fitted[k]) if fitted is not None else ""
        lines.append(f"{fmt(c)},{int(n)},{f}")
    _write_lines(path, lines)


def write_scatter_csv(bursts: BurstSet, gamma: float, path) -> int:
    """E/S pairs per ALEX burst; returns the number of zero-total bursts omitted."""
    index, e, s, skipped = burst_stoichiometries(bursts, gamma)
    lines = ["burst_index,E,S"]
    lines += [f"{int(i)},{fmt(ei)},{fmt(si)}" for i, ei, si in zip(index, e, s)]
    _write_lines(path, lines)
    return skipped


def frequency_grid(bursts: BurstSet, d_bins: int, a_bins: int):
    """2-D event counts over (donor, acceptor) burst counts.

    Each axis spans ``[0, max]`` of its channel (``[0, 1]`` if empty or all
    zero). Returns ``(d_edges, a_edges, counts)`` with ``counts`` shaped
    ``(d_bins, a_bins)``.
    """
    if d_bins < 1 or a_bins < 1:
        raise ValueOutOfDomain("grid needs at least one bin per axis")
    d_hi = float(bursts.donor.max()) if len(bursts) and bursts.donor.max() > 0 else 1.0
    a_hi = float(bursts.acceptor.max()) if len(bursts) and bursts.acceptor.max() > 0 else 1.0
    counts, d_edges, a_edges = np.histogram2d(bursts.donor, bursts.acceptor,
                                              bins=(d_bins, a_bins),
                                              range=((0.0, d_hi), (0.0, a_hi)))
    return d_edges, a_edges, counts.astype(np.int64)


def write_frequency_grid(bursts: BurstSet, d_bins: int, a_bins: int, path) -> None:
    """``d_center,a_center,count`` rows, donor axis outermost."""
    d_edges, a_edges, counts = frequency_grid(bursts, d_bins, a_bins)
    dc = 0.5 * (d_edges[:-1] + d_edges[1:])
    ac = 0.5 * (a_edges[:-1] + a_edges[1:])
    lines = ["d_center,a_center,count"]
    for i, d in enumerate(dc):
        for j, a in enumerate(ac):
            lines.append(f"{fmt(d)},{fmt(a)},{int(counts[i, j])}")
    _write_lines(path, lines)


def render_histogram_svg(hist: EfficiencyHistogram, path, width: int = 640,
                         height: int = 400) -> None:
    """Standalone SVG: one ``rect`` per bin plus a ``polyline`` for the fit."""
    left, right, top, bottom = 70, 20, 20, 55
    pw, ph = width - left - right, height - top - bottom
    xs = np.linspace(hist.bin_min, hist.bin_max, 256)
    curve = hist.fit(xs) if hist.fit is not None else None
    ymax = float(hist.counts.max()) if hist.n_bins else 0.0
    if curve is not None:
        ymax = max(ymax, float(np.max(curve)))
    ymax = ymax * 1.05 if ymax > 0 else 1.0
    span = hist.bin_max - hist.bin_min

    def X(v):
        return left + (v - hist.bin_min) / span * pw

    def Y(v):
        return top + ph - v / ymax * ph

    def n(v):
        return "%.3f" % v

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        '<g fill="#7da7d9" stroke="#3b6ea5" stroke-width="0.5">',
    ]
    edges = hist.edges
    for k, c in enumerate(hist.counts):
        x0, x1 = X(edges[k]), X(edges[k + 1])
        y = Y(float(c))
        out.append(f'<rect x="{n(x0)}" y="{n(y)}" width="{n(x1 - x0)}" '
                   f'height="{n(top + ph - y)}"/>')
    out.append("</g>")
    if curve is not None:
        pts = " ".join(f"{n(X(x))},{n(Y(y))}" for x, y in zip(xs, np.clip(curve, 0, ymax)))
        out.append(f'<polyline fill="none" stroke="#c0392b" stroke-width="1.5" points="{pts}"/>')
    # axes
    x_axis_y = top + ph
    out.append(f'<line x1="{left}" y1="{x_axis_y}" x2="{left + pw}" y2="{x_axis_y}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{x_axis_y}" stroke="black"/>')
    for v in np.linspace(hist.bin_min, hist.bin_max, 6):
        out.append(f'<line x1="{n(X(v))}" y1="{x_axis_y}" x2="{n(X(v))}" y2="{x_axis_y + 5}" stroke="black"/>')
        out.append(f'<text x="{n(X(v))}" y="{x_axis_y + 18}" text-anchor="middle">{escape("%.4g" % v)}</text>')
    for v in np.linspace(0, ymax, 5):
        out.append(f'<line x1="{left - 5}" y1="{n(Y(v))}" x2="{left}" y2="{n(Y(v))}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{n(Y(v) + 4)}" text-anchor="end">{"%.0f" % v}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">FRET Efficiency</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">Events</text>')
    out.append("</svg>")
    _write_lines(path, out)


def write_forster_curve_csv(fit, separations, path, n_points: int = 201) -> None:
    """Fitted efficiency sampled on ``[0.5 * min(r), 1.5 * max(r)]``."""
    r = np.asarray(separations, dtype=float)
    grid = np.linspace(0.5 * r.min(), 1.5 * r.max(), n_points)
    lines = ["r,E_fit"] + [f"{fmt(x)},{fmt(e)}" for x, e in zip(grid, fit(grid))]
    _write_lines(path, lines)


def write_text(path, text: str) -> None:
    _write_lines(path, text.rstrip("\n").split("\n"))

