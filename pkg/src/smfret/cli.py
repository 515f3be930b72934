"""Batch command-line driver.

::

    smfret analyze      --config run.cfg     # two-channel FRET data
    smfret analyze-alex --config run.cfg     # four-channel ALEX data
    smfret forster      points.csv           # fit R0 to (r, E) pairs
    smfret simulate     --config sim.cfg     # synthetic input data

Exit status is 0 on success (a fit that did not converge is only a
warning), 2 for command-line usage errors and the ``exit_code`` of the
raised :class:`~smfret.errors.FretError` subclass otherwise.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as fio
from .analysis import (
    build_histogram,
    burst_efficiencies,
    fit_forster_curve,
    fit_gaussian,
)
from .correct import subtract_background, subtract_background_alex, subtract_crosstalk
from .errors import (
    DegenerateData,
    EmptyInput,
    FretError,
    NonPositiveDistance,
    OutOfDomainPoint,
    ValueOutOfDomain,
    WriteFailed,
)
from .model import step
from .select import threshold_alex, threshold_and, threshold_or, threshold_sum
from .simulate import simulate_alex_trace, simulate_fret_trace

log = logging.getLogger("smfret")

GRID_BINS = 20


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ";".join(_fmt_value(x) for x in v)
    if isinstance(v, (int, float, np.integer, np.floating)):
        return fio.fmt(v)
    return str(v)


def _fmt_step(entry) -> str:
    name, params = entry
    args = " ".join(f"{k}={_fmt_value(v)}" for k, v in params)
    return f"{name} {args}".rstrip()


def _select(cfg, trace):
    if cfg.threshold_mode == "and":
        return threshold_and(trace, cfg.t_donor, cfg.t_acceptor)
    if cfg.threshold_mode == "or":
        return threshold_or(trace, cfg.t_donor, cfg.t_acceptor)
    if cfg.threshold_mode == "sum":
        return threshold_sum(trace, cfg.t_donor + cfg.t_acceptor)
    return threshold_alex(trace, cfg.t_donor, cfg.t_acceptor)


def run_pipeline(cfg, trace):
    """Background -> threshold -> crosstalk -> efficiency -> histogram -> fit.

    Returns a dict with every intermediate product and the step log.
    """
    warnings = []
    if cfg.mode == "alex":
        corrected = subtract_background_alex(
            trace, (cfg.auto_donor, cfg.auto_donor, cfg.auto_acceptor, cfg.auto_acceptor))
    else:
        corrected = subtract_background(trace, cfg.auto_donor, cfg.auto_acceptor)
    selected = _select(cfg, corrected)
    bursts = subtract_crosstalk(selected, cfg.cross_DtoA, cfg.cross_AtoD)
    values, skipped = burst_efficiencies(bursts, cfg.gamma)
    hist = build_histogram(values, cfg.bin_min, cfg.bin_max, cfg.bin_width)
    steps = list(bursts.provenance)
    steps.append(step("fret_efficiency", gamma=cfg.gamma))
    steps.append(step("build_histogram", bin_min=cfg.bin_min, bin_max=cfg.bin_max,
                      bin_width=cfg.bin_width))
    if len(bursts) == 0:
        warnings.append("no bursts selected; no fit attempted")
    else:
        try:
            fit = fit_gaussian(hist)
        except DegenerateData as exc:
            warnings.append(f"fit skipped: {exc}")
        else:
            hist = hist.with_fit(fit)
            steps.append(step("fit_gaussian"))
            if not fit.converged:
                warnings.append("Gaussian fit did not converge (iteration cap or parameter bound)")
    if skipped:
        warnings.append(f"{skipped} burst(s) with zero photons skipped")
    return dict(trace=trace, corrected=corrected, selected=selected, bursts=bursts,
                efficiencies=values, skipped=skipped, hist=hist, steps=steps,
                warnings=warnings)


def format_summary(command, cfg, result, extra_counts=()) -> str:
    hist = result["hist"]
    lines = ["# smfret analysis summary", f"command = {command}", "", "[parameters]"]
    for key in ("mode", "threshold_mode", "auto_donor", "auto_acceptor", "t_donor",
                "t_acceptor", "cross_DtoA", "cross_AtoD", "gamma", "bin_min", "bin_max",
                "bin_width"):
        lines.append(f"{key} = {_fmt_value(getattr(cfg, key))}")
    lines += ["", "[pipeline]"]
    lines += [f"step{i} = {_fmt_step(s)}" for i, s in enumerate(result["steps"], start=1)]
    lines += ["", "[counts]",
              f"bins_read = {len(result['trace'])}",
              f"bursts_selected = {len(result['bursts'])}",
              f"bursts_skipped_zero_total = {result['skipped']}",
              f"efficiencies = {len(result['efficiencies'])}",
              f"in_histogram_range = {hist.n_in_range}"]
    lines += [f"{k} = {v}" for k, v in extra_counts]
    lines += ["", "[fit]"]
    fit = hist.fit
    if fit is None:
        lines.append("fitted = false")
    else:
        lines += ["fitted = true",
                  f"amplitude = {fio.fmt(fit.amplitude)}",
                  f"mean = {fio.fmt(fit.mean)}",
                  f"sigma = {fio.fmt(fit.sigma)}",
                  f"residual_sse = {fio.fmt(fit.residual_sse)}",
                  f"iterations = {fit.iterations}",
                  f"converged = {_fmt_value(fit.converged)}"]
    lines += ["", "[warnings]"]
    lines += [f"warning{i} = {w}" for i, w in enumerate(result["warnings"], start=1)]
    return "\n".join(lines) + "\n"


def parse_summary(path) -> dict:
    """Read a summary file back into ``{section: {key: value}}``."""
    out = {"": {}}
    section = ""
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            out.setdefault(section, {})
            continue
        key, _, value = line.partition("=")
        out[section][key.strip()] = value.strip()
    return out


def _figures(out: Path, result, scatter=None):
    from . import plotting

    try:
        plotting.plot_histogram(result["hist"], out / "histogram.png")
        grid = fio.frequency_grid(result["bursts"], GRID_BINS, GRID_BINS)
        plotting.plot_frequency_heatmap(*grid, out / "heatmap.png")
        plotting.plot_frequency_3d(*grid, out / "frequency_3d.png")
        if scatter is not None:
            plotting.plot_es_scatter(*scatter, out / "scatter.png")
    except OSError as exc:
        raise WriteFailed(f"cannot write figure in {out}: {exc}") from exc


def _analyze(config_path, mode, output_dir=None, figures=True) -> int:
    cfg = fio.parse_config(config_path, default_mode=mode)
    if cfg.mode != mode:
        other = "analyze-alex" if cfg.mode == "alex" else "analyze"
        raise ValueOutOfDomain(f"{config_path}: mode = {cfg.mode}; use the '{other}' command")
    out = Path(output_dir) if output_dir is not None else cfg.resolved_output_dir()
    trace = fio.parse_csv(cfg.base_dir, cfg.input_files, cfg.mode)
    result = run_pipeline(cfg, trace)
    bursts = result["bursts"]
    extra = []
    scatter = None
    if mode == "alex":
        skipped = fio.write_scatter_csv(bursts, cfg.gamma, out / "scatter.csv")
        extra.append(("scatter_rows", len(bursts) - skipped))
        _, e, s, _ = fio.burst_stoichiometries(bursts, cfg.gamma)
        scatter = (e, s)
    fio.write_histogram_csv(result["hist"], out / "histogram.csv")
    fio.render_histogram_svg(result["hist"], out / "histogram.svg")
    fio.write_frequency_grid(bursts, GRID_BINS, GRID_BINS, out / "grid.csv")
    if figures:
        _figures(out, result, scatter)
    command = "analyze-alex" if mode == "alex" else "analyze"
    fio.write_text(out / "summary.txt", format_summary(command, cfg, result, extra))
    for w in result["warnings"]:
        log.warning(w)
    fit = result["hist"].fit
    msg = f"{len(bursts)} bursts"
    if fit is not None:
        msg += f"; fitted mean E = {fit.mean:.6f}, sigma = {fit.sigma:.6f}"
    print(f"{msg}; results in {out}")
    return 0


def cmd_analyze(config_path, output_dir=None, figures=True) -> int:
    """Two-channel FRET workflow driven by a config file."""
    return _analyze(config_path, "fret", output_dir, figures)


def cmd_analyze_alex(config_path, output_dir=None, figures=True) -> int:
    """ALEX workflow; additionally writes ``scatter.csv`` (E, S per burst)."""
    return _analyze(config_path, "alex", output_dir, figures)


def cmd_forster(points_path, output_dir=None, figures=True) -> int:
    """Fit the Förster distance to ``r,E`` rows and write the fitted curve."""
    points = fio.read_points_csv(points_path)
    try:
        fit = fit_forster_curve(points)
    except (OutOfDomainPoint, NonPositiveDistance, EmptyInput) as exc:
        raise type(exc)(f"{points_path}: {exc}") from None
    out = Path(output_dir) if output_dir is not None else Path(points_path).resolve().parent
    separations = [r for r, _ in points]
    fio.write_forster_curve_csv(fit, separations, out / "forster_curve.csv")
    if figures:
        from . import plotting

        try:
            plotting.plot_forster_curve(points, fit, out / "forster_curve.png")
        except OSError as exc:
            raise WriteFailed(f"cannot write figure in {out}: {exc}") from exc
    print(f"R0 = {fit.r0:.6f}")
    print(f"residual_sse = {fit.residual_sse:.6g}")
    print(f"converged = {_fmt_value(fit.converged)}")
    if not fit.converged:
        log.warning("Förster fit did not converge")
    return 0


def cmd_simulate(config_path, output_dir=None, seed=None) -> int:
    """Write ``trace.csv`` and ``ground_truth.csv`` from a simulation config."""
    sim = fio.parse_sim_config(config_path)
    params = sim.params if seed is None else replace(sim.params, seed=seed)
    out = Path(output_dir) if output_dir is not None else sim.resolved_output_dir()
    if sim.mode == "alex":
        brightness = (sim.acceptor_brightness if sim.acceptor_brightness is not None
                      else params.burst_intensity_mean)
        trace, truth = simulate_alex_trace(params, brightness, sim.donor_only_fraction)
    else:
        trace, truth = simulate_fret_trace(params)
    fio.write_trace_csv(trace, out / "trace.csv")
    fio.write_ground_truth_csv(truth, out / "ground_truth.csv")
    print(f"{len(trace)} bins ({int(truth.burst.sum())} bursts) written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smfret", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("analyze", "analyse two-channel FRET data"),
                           ("analyze-alex", "analyse four-channel ALEX data")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="key = value configuration file")
        p.add_argument("--output-dir", help="override output_dir from the config")
        p.add_argument("--no-figures", action="store_true", help="skip PNG figures")

    p = sub.add_parser("forster", help="fit the Förster distance to r,E points")
    p.add_argument("points", help="CSV file of r,E rows")
    p.add_argument("--output-dir", help="where to write the fitted curve (default: next to input)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figure")

    p = sub.add_parser("simulate", help="generate synthetic binned data")
    p.add_argument("--config", required=True, help="simulation configuration file")
    p.add_argument("--output-dir", help="override output_dir from the config")
    p.add_argument("--seed", type=int, help="override seed from the config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "analyze":
            return cmd_analyze(args.config, args.output_dir, not args.no_figures)
        if args.command == "analyze-alex":
            return cmd_analyze_alex(args.config, args.output_dir, not args.no_figures)
        if args.command == "forster":
            return cmd_forster(args.points, args.output_dir, not args.no_figures)
        return cmd_simulate(args.config, args.output_dir, args.seed)
    except FretError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
