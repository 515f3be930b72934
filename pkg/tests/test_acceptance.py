"""Acceptance criteria, one test per criterion.

Each test prints a ``[PASS]``/``[FAIL]`` line through the ``acceptance``
fixture; the lines are repeated at the end of the pytest run.
"""

import time

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from smfret import cli
from smfret import io as fio
from smfret.analysis import (
    EfficiencyHistogram,
    build_histogram,
    fit_forster_curve,
    fit_gaussian_curve,
    forster_efficiency,
    fret_efficiency,
    gaussian,
    gaussian_residual_jacobian,
)
from smfret.correct import subtract_background, subtract_crosstalk
from smfret.errors import MixedMode
from smfret.io import RunConfig
from smfret.model import BurstSet, new_fret_trace
from smfret.select import threshold_and, threshold_or, threshold_sum
from smfret.simulate import SimParams, simulate_alex_trace

PROPERTY_CASES = 1000

# background and crosstalk corrections shared by criteria 1 and 6
BG_D, BG_A = 0.3, 0.2
X_DA, X_AD = 0.05, 0.01


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


# -- 1. end-to-end E recovery -----------------------------------------------------------

SIM_CFG = f"""n_bins = 50000
seed = 0
burst_rate = 0.05
burst_intensity_mean = 60
true_E = 0.75
background_d = {BG_D}
background_a = {BG_A}
cross_DtoA = {X_DA}
cross_AtoD = {X_AD}
gamma = 1.0
"""

RUN_CFG = f"""auto_donor = {BG_D}
auto_acceptor = {BG_A}
t_donor = 15
t_acceptor = 15
cross_DtoA = {X_DA}
cross_AtoD = {X_AD}
gamma = 1.0
bin_min = 0
bin_max = 1
bin_width = 0.02
input_files = sim/trace.csv
output_dir = out
"""


def test_1_end_to_end_recovery(tmp_path, acceptance, capsys):
    sim_cfg = _write(tmp_path / "sim.cfg", SIM_CFG)
    run_cfg = _write(tmp_path / "run.cfg", RUN_CFG)
    means, converged = [], []
    start = time.perf_counter()
    for seed in range(10):
        assert cli.cmd_simulate(sim_cfg, tmp_path / "sim", seed=seed) == 0
        assert cli.cmd_analyze(run_cfg, figures=False) == 0
        summary = cli.parse_summary(tmp_path / "out" / "summary.txt")
        means.append(float(summary["fit"]["mean"]))
        converged.append(summary["fit"]["converged"] == "true")
    elapsed = time.perf_counter() - start
    capsys.readouterr()
    worst = max(abs(m - 0.75) for m in means)
    ok = worst <= 0.02 and all(converged)
    acceptance("1 end-to-end E recovery", ok,
               f"10 seeds, means {min(means):.4f}..{max(means):.4f}, "
               f"max |mean-0.75| = {worst:.4f} (tol 0.02), all converged = {all(converged)}, "
               f"{elapsed:.2f} s")
    acceptance("1 runtime", elapsed < 5.0, f"{elapsed:.2f} s for 10 simulate+analyze runs (< 5 s)")
    assert ok
    assert elapsed < 5.0


# -- 2. Förster-curve fit -----------------------------------------------------------------

SEPARATIONS = np.array([4.0, 6.0, 8.0, 10.0, 12.0])


def test_2_forster_fit(acceptance):
    e = forster_efficiency(SEPARATIONS, 5.0)
    fit = fit_forster_curve(list(zip(SEPARATIONS, e)))
    noiseless_err = abs(fit.r0 - 5.0)
    ok_noiseless = noiseless_err <= 1e-6 and fit.converged

    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        # the far points sit near E = 0 where noise would leave the open interval
        noisy = np.clip(e + rng.normal(0.0, 0.01, e.size), 1e-6, 1 - 1e-6)
        r0 = fit_forster_curve(list(zip(SEPARATIONS, noisy))).r0
        hits += abs(r0 - 5.0) <= 0.05 * 5.0
    ok_noisy = hits >= 95

    shape_ok = True
    grid = np.linspace(0.1, 30.0, 3000)
    for true_r0 in (4.2, 5.0, 7.5, 10.0, 11.8):
        f = fit_forster_curve(list(zip(SEPARATIONS, forster_efficiency(SEPARATIONS, true_r0))))
        curve = f(grid)
        shape_ok &= bool(np.all(np.diff(curve) < 0))
        shape_ok &= bool(f(4.0) > 0.5 > f(12.0))

    acceptance("2 Förster noiseless", ok_noiseless, f"|R0-5| = {noiseless_err:.2e} (tol 1e-6)")
    acceptance("2 Förster noisy", ok_noisy, f"{hits}/100 trials within 5% (need >= 95)")
    acceptance("2 Förster curve shape", shape_ok,
               "strictly decreasing and E(4) > 0.5 > E(12) for R0 in {4.2, 5, 7.5, 10, 11.8}")
    assert ok_noiseless and ok_noisy and shape_ok


# -- 3. Gaussian-fit oracle equivalence ------------------------------------------------------

def test_3_gaussian_closed_form(acceptance):
    hist = EfficiencyHistogram.from_counts(np.zeros(50, dtype=np.int64), 0.0, 1.0, 0.02)
    x = hist.centers
    y = gaussian(x, 100.0, 0.5, 0.1)
    fit = fit_gaussian_curve(x, y, bin_width=hist.bin_width)
    rel = np.abs(np.array([fit.amplitude - 100.0, fit.mean - 0.5, fit.sigma - 0.1])
                 / np.array([100.0, 0.5, 0.1]))
    ok = bool(np.all(rel <= 1e-3)) and fit.converged
    acceptance("3 Gaussian closed form", ok,
               f"relative errors a={rel[0]:.1e} mu={rel[1]:.1e} sigma={rel[2]:.1e} (tol 1e-3)")
    assert ok


def test_3_gaussian_jacobian(acceptance):
    rng = np.random.default_rng(2024)
    x = np.linspace(0.01, 0.99, 50)
    worst = 0.0
    for _ in range(20):
        p = np.array([rng.uniform(1, 500), rng.uniform(0.05, 0.95), rng.uniform(0.02, 0.4)])
        jac = gaussian_residual_jacobian(p, x)
        fd = np.empty_like(jac)
        for k in range(3):
            h = 1e-6 * max(abs(p[k]), 1e-3)
            up, dn = p.copy(), p.copy()
            up[k] += h
            dn[k] -= h
            # residuals are y - model, so their derivative is the negated model slope
            fd[:, k] = -(gaussian(x, *up) - gaussian(x, *dn)) / (2 * h)
        scale = np.max(np.abs(jac), axis=0)
        worst = max(worst, float(np.max(np.abs(jac - fd) / scale)))
    ok = worst <= 1e-5
    acceptance("3 Gaussian Jacobian", ok,
               f"max |J - J_fd| / max|J_col| = {worst:.1e} over 20 points (tol 1e-5)")
    assert ok


# -- 4. invariant suites -------------------------------------------------------------------------

counts = st.integers(min_value=0, max_value=10_000)
reals = st.floats(min_value=0, max_value=1e4, allow_nan=False)
gammas = st.floats(min_value=0.05, max_value=20)
PROP = settings(max_examples=PROPERTY_CASES, deadline=None, database=None,
                suppress_health_check=[HealthCheck.too_slow])


def _trace(draw_pairs):
    d, a = zip(*draw_pairs)
    return new_fret_trace(d, a)


pairs = st.lists(st.tuples(counts, counts), min_size=1, max_size=30)


def _efficiency_bounds_and_monotonicity():
    @PROP
    @given(n_a=reals, n_d=reals, extra=st.floats(min_value=0.5, max_value=100), gamma=gammas)
    def prop(n_a, n_d, extra, gamma):
        if n_a + n_d == 0:
            return
        e = fret_efficiency(n_a, n_d, gamma)
        assert 0.0 <= e <= 1.0
        assert fret_efficiency(n_a + extra, n_d, gamma) >= e
        assert fret_efficiency(n_a, n_d + extra, gamma) <= e

    prop()


def _forster_properties():
    @PROP
    @given(r0=st.floats(min_value=0.1, max_value=100),
           r=st.floats(min_value=0.01, max_value=100),
           factor=st.floats(min_value=1.001, max_value=10))
    def prop(r0, r, factor):
        assert forster_efficiency(r0, r0) == pytest.approx(0.5, abs=1e-15)
        e1, e2 = forster_efficiency(r, r0), forster_efficiency(r * factor, r0)
        assert e2 <= e1
        # away from saturation the step is far above double resolution
        if 1e-9 < e1 < 1 - 1e-9:
            assert e2 < e1

    prop()


def _threshold_relations():
    @PROP
    @given(rows=pairs, t_d=st.integers(0, 200), t_a=st.integers(0, 200),
           bump=st.integers(1, 50))
    def prop(rows, t_d, t_a, bump):
        tr = _trace(rows)
        and_ = set(threshold_and(tr, t_d, t_a).index.tolist())
        or_ = set(threshold_or(tr, t_d, t_a).index.tolist())
        sum_ = set(threshold_sum(tr, t_d + t_a).index.tolist())
        assert and_ <= sum_ <= or_
        assert set(threshold_and(tr, t_d + bump, t_a).index.tolist()) <= and_
        assert set(threshold_or(tr, t_d, t_a + bump).index.tolist()) <= or_
        assert set(threshold_sum(tr, t_d + t_a + bump).index.tolist()) <= sum_

    prop()


def _histogram_conservation():
    @PROP
    @given(values=st.lists(st.floats(min_value=-0.5, max_value=1.5), max_size=200),
           n_bins=st.sampled_from([1, 2, 5, 10, 25, 50, 100]))
    def prop(values, n_bins):
        h = build_histogram(values, 0.0, 1.0, 1.0 / n_bins)
        inside = sum(0.0 <= v <= 1.0 for v in values)
        assert int(h.counts.sum()) == h.n_in_range == inside
        assert h.n_total == len(values)

    prop()


def _clamp_nonnegativity():
    @PROP
    @given(rows=pairs, bg=st.tuples(reals, reals),
           x=st.tuples(st.floats(0, 0.999), st.floats(0, 0.999)))
    def prop(rows, bg, x):
        tr = subtract_background(_trace(rows), *bg)
        assert np.all(tr.donor >= 0) and np.all(tr.acceptor >= 0)
        bs = subtract_crosstalk(threshold_or(tr, 0, 0), *x)
        assert np.all(bs.donor >= 0) and np.all(bs.acceptor >= 0)

    prop()


def _crosstalk_zero_identity():
    @PROP
    @given(rows=pairs)
    def prop(rows):
        d, a = zip(*rows)
        bs = BurstSet(donor=d, acceptor=a, index=range(len(d)))
        out = subtract_crosstalk(bs, 0.0, 0.0)
        assert np.array_equal(out.donor, bs.donor)
        assert np.array_equal(out.acceptor, bs.acceptor)
        assert np.array_equal(out.index, bs.index)

    prop()


@pytest.mark.parametrize("name,suite", [
    ("E in [0,1] and monotone", _efficiency_bounds_and_monotonicity),
    ("E(R0)=0.5 and strict decrease", _forster_properties),
    ("threshold monotonicity, AND <= SUM <= OR", _threshold_relations),
    ("histogram count conservation", _histogram_conservation),
    ("clamp non-negativity", _clamp_nonnegativity),
    ("crosstalk-zero identity", _crosstalk_zero_identity),
])
def test_4_invariant_suites(name, suite, acceptance):
    try:
        suite()
    except Exception as exc:
        acceptance(f"4 {name}", False, f"falsified: {type(exc).__name__}")
        raise
    acceptance(f"4 {name}", True, f"{PROPERTY_CASES} hypothesis cases")


# -- 5. I/O determinism and round trip ------------------------------------------------------------

def test_5_round_trip(tmp_path, acceptance):
    rng = np.random.default_rng(5)
    ok = True
    for trial in range(50):
        n = int(rng.integers(1, 2000))
        scale = 10 ** int(rng.integers(0, 9))
        tr = new_fret_trace(rng.integers(0, scale + 1, n), rng.integers(0, scale + 1, n))
        fio.write_trace_csv(tr, tmp_path / "t.csv")
        back = fio.parse_csv(tmp_path, ["t.csv"])
        ok &= back == tr
    acceptance("5 trace -> CSV -> trace", ok, "50 random integer traces exact")
    assert ok


def test_5_byte_identical_outputs(tmp_path, acceptance, capsys):
    sim = _write(tmp_path / "sim.cfg", SIM_CFG.replace("50000", "5000"))
    alex = _write(tmp_path / "alex.cfg", SIM_CFG.replace("50000", "5000")
                  + "mode = alex\ndonor_only_fraction = 0.3\noutput_dir = asim\n")
    run = _write(tmp_path / "run.cfg", RUN_CFG)
    run_alex = _write(tmp_path / "run_alex.cfg", RUN_CFG.replace("sim/", "asim/") + "mode = alex\n")
    pts = _write(tmp_path / "pts.csv", "4,0.8\n6,0.25\n8,0.06\n10,0.016\n12,0.006\n")
    snapshots = []
    for rep in ("a", "b"):
        out = tmp_path / rep
        assert cli.cmd_simulate(sim, tmp_path / "sim") == 0
        assert cli.cmd_simulate(alex, tmp_path / "asim") == 0
        assert cli.cmd_analyze(run, out / "fret") == 0
        assert cli.cmd_analyze_alex(run_alex, out / "alex") == 0
        assert cli.cmd_forster(pts, out / "forster") == 0
        for d in ("sim", "asim"):
            for f in (tmp_path / d).iterdir():
                (out / d).mkdir(parents=True, exist_ok=True)
                (out / d / f.name).write_bytes(f.read_bytes())
        snapshots.append({p.relative_to(out).as_posix(): p.read_bytes()
                          for p in sorted(out.rglob("*")) if p.is_file()})
    capsys.readouterr()
    a, b = snapshots
    same = a.keys() == b.keys() and all(a[k] == b[k] for k in a)
    kinds = sorted({k.rsplit(".", 1)[-1] for k in a})
    acceptance("5 byte-identical reruns", same,
               f"{len(a)} files ({', '.join(kinds)}) identical across two runs")
    assert same


def test_5_mode_mismatch(tmp_path, acceptance):
    _write(tmp_path / "four.csv", "d_d,d_a,a_d,a_a\n1,2,3,4\n")
    _write(tmp_path / "two.csv", "\n10,5\n8,2\n")
    details = []
    ok = True
    for name, mode, line in (("four.csv", "fret", 2), ("two.csv", "alex", 2)):
        try:
            fio.parse_csv(tmp_path, [name], mode)
        except MixedMode as exc:
            ok &= exc.line == line and f"{name}:{line}:" in str(exc)
            details.append(str(exc).split(str(tmp_path))[-1].lstrip("/\\"))
        else:
            ok = False
    acceptance("5 mode mismatch rejected", ok, " | ".join(details))
    assert ok


# -- 6. ALEX sorting -----------------------------------------------------------------------------------

def _alex_config(mode, threshold_mode, t_donor, t_acceptor):
    return RunConfig(t_donor=t_donor, t_acceptor=t_acceptor, input_files=(),
                     auto_donor=BG_D, auto_acceptor=BG_A, cross_DtoA=X_DA, cross_AtoD=X_AD,
                     mode=mode, threshold_mode=threshold_mode)


def test_6_alex_sorting(acceptance):
    params = SimParams(n_bins=50000, burst_rate=0.05, burst_intensity_mean=60, true_E=0.75,
                       background_d=BG_D, background_a=BG_A, cross_DtoA=X_DA,
                       cross_AtoD=X_AD, gamma=1.0, seed=6)
    trace, truth = simulate_alex_trace(params, acceptor_brightness=60.0,
                                       donor_only_fraction=0.3)
    alex = cli.run_pipeline(_alex_config("alex", "alex", 15, 15), trace)
    # plain analysis: the same donor-excitation photon threshold, a_a ignored
    plain = cli.run_pipeline(_alex_config("fret", "sum", 15, 0), trace.donor_excitation())
    fa, fp = alex["hist"].fit, plain["hist"].fit
    ok_alex = abs(fa.mean - 0.75) <= 0.03
    shift = fa.mean - fp.mean
    ok_shift = shift >= 0.03
    acceptance("6 ALEX fitted mean", ok_alex,
               f"{fa.mean:.4f} from {len(alex['bursts'])} bursts (0.75 +/- 0.03), "
               f"converged = {fa.converged}")
    acceptance("6 plain FRET shifts low", ok_shift,
               f"fitted mean {fp.mean:.4f} (converged = {fp.converged}), shift {shift:.4f} "
               f"(need >= 0.03); raw mean E {np.mean(plain['efficiencies']):.4f} vs "
               f"{np.mean(alex['efficiencies']):.4f}")
    assert ok_alex and ok_shift
