"""FRET observables, efficiency histograms and least-squares fitting.

The fitters share a small Levenberg-Marquardt solver (:func:`levenberg_marquardt`)
with an analytic Jacobian and Marquardt's diagonal scaling of the damping
term, which makes the one-parameter distance fit exactly equivariant under
rescaling of the distances.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    BadBinning,
    DegenerateData,
    EmptyInput,
    NonPositiveDistance,
    OutOfDomainPoint,
    ZeroTotal,
)
from .model import Burst, BurstSet

GAUSS_TOL = 1e-8
GAUSS_MAX_ITER = 500
FORSTER_TOL = 1e-12
FORSTER_MAX_ITER = 500


# ---------------------------------------------------------------------------
# per-burst observables
# ---------------------------------------------------------------------------

def fret_efficiency(n_a: float, n_d: float, gamma: float = 1.0) -> float:
    """Efficiency ``n_a / (n_a + gamma * n_d)`` of one burst.

    Raises
    ------
    ZeroTotal
        If the weighted total is zero.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    total = n_a + gamma * n_d
    if total == 0:
        raise ZeroTotal("burst has no photons (n_a + gamma*n_d == 0)")
    return n_a / total


def proximity_ratio(n_a: float, n_d: float) -> float:
    """Uncorrected efficiency (gamma = 1)."""
    return fret_efficiency(n_a, n_d, 1.0)


def forster_efficiency(r, r0):
    """Transfer efficiency ``1 / (1 + (r/r0)**6)`` at dye separation ``r``.

    Works element-wise on arrays.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or not r0 > 0:
        raise NonPositiveDistance("distances and r0 must be > 0")
    e = 1.0 / (1.0 + (r / r0) ** 6)
    return float(e) if e.ndim == 0 else e


def alex_fret_efficiency(burst: Burst, gamma: float = 1.0) -> float:
    """Efficiency from the donor-excitation channels A_D and D_D."""
    return fret_efficiency(burst.acceptor_counts, burst.donor_counts, gamma)


def stoichiometry(burst: Burst, gamma: float = 1.0) -> float:
    """ALEX stoichiometry ``(g*D_D + A_D) / (g*D_D + A_D + A_A)``.

    Donor-only species sit at 1, acceptor-only at 0, and doubly labelled
    molecules in between.
    """
    if not burst.is_alex:
        raise ValueError("stoichiometry needs an ALEX burst")
    dex = gamma * burst.donor_counts + burst.acceptor_counts
    total = dex + burst.a_a_counts
    if total == 0:
        raise ZeroTotal("burst has no photons in any ALEX channel")
    return dex / total


def efficiencies(n_a, n_d, gamma: float = 1.0, on_zero: str = "skip"):
    """Vectorised :func:`fret_efficiency`.

    Parameters
    ----------
    n_a, n_d : array_like
    gamma : float
    on_zero : {'skip', 'raise'}
        What to do with bursts whose weighted total is zero.

    Returns
    -------
    values : ndarray
        Efficiencies of the valid bursts.
    valid : ndarray of bool
        Mask of the bursts that produced a value.
    """
    n_a = np.asarray(n_a, dtype=float)
    n_d = np.asarray(n_d, dtype=float)
    total = n_a + gamma * n_d
    valid = total > 0
    if on_zero == "raise" and not valid.all():
        raise ZeroTotal(f"{int((~valid).sum())} burst(s) with zero total")
    elif on_zero not in ("skip", "raise"):
        raise ValueError(f"unknown on_zero policy {on_zero!r}")
    return n_a[valid] / total[valid], valid


def burst_efficiencies(bursts: BurstSet, gamma: float = 1.0, on_zero: str = "skip"):
    """Efficiency of every burst; returns ``(values, n_skipped)``."""
    values, valid = efficiencies(bursts.acceptor, bursts.donor, gamma, on_zero)
    return values, int((~valid).sum())


def burst_stoichiometries(bursts: BurstSet, gamma: float = 1.0):
    """E and S for every ALEX burst with a non-zero donor-excitation total.

    Returns
    -------
    index : ndarray
        Source bin index of each kept burst.
    E, S : ndarray
    n_skipped : int
    """
    if not bursts.is_alex:
        raise ValueError("stoichiometry needs an ALEX burst set")
    dex = gamma * bursts.donor + bursts.acceptor
    valid = dex > 0
    e = bursts.acceptor[valid] / dex[valid]
    s = dex[valid] / (dex[valid] + bursts.a_a[valid])
    return bursts.index[valid], e, s, int((~valid).sum())


# ---------------------------------------------------------------------------
# histogram
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianFit:
    amplitude: float
    mean: float
    sigma: float
    residual_sse: float
    iterations: int
    converged: bool

    def __call__(self, x):
        return gaussian(x, self.amplitude, self.mean, self.sigma)


@dataclass(frozen=True, eq=False)
class EfficiencyHistogram:
    """Counts over ``n_bins`` equal bins spanning ``[bin_min, bin_max]``.

    ``n_total`` counts every value offered, including those outside the
    range; ``n_in_range`` only the binned ones.
    """

    bin_min: float
    bin_max: float
    bin_width: float
    counts: np.ndarray
    n_in_range: int
    n_total: int
    fit: Optional[GaussianFit] = None

    def __post_init__(self):
        n = _bin_count(self.bin_min, self.bin_max, self.bin_width)
        counts = np.array(self.counts, dtype=np.int64, copy=True).reshape(-1)
        if len(counts) != n:
            raise BadBinning(f"expected {n} counts, got {len(counts)}")
        if np.any(counts < 0):
            raise ValueError("histogram counts must be non-negative")
        if counts.sum() != self.n_in_range or self.n_in_range > self.n_total:
            raise ValueError("inconsistent histogram totals")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.bin_min, self.bin_max, self.n_bins + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    def with_fit(self, fit: Optional[GaussianFit]) -> "EfficiencyHistogram":
        return replace(self, fit=fit)

    @classmethod
    def from_counts(cls, counts, bin_min=0.0, bin_max=1.0, bin_width=None):
        """Wrap pre-binned counts (``bin_width`` defaults to range/len)."""
        counts = np.asarray(counts)
        if bin_width is None:
            bin_width = (bin_max - bin_min) / len(counts)
        total = int(counts.sum())
        return cls(bin_min, bin_max, bin_width, counts, total, total)


def _bin_count(bin_min: float, bin_max: float, bin_width: float) -> int:
    if not bin_max > bin_min:
        raise BadBinning(f"bin_max ({bin_max}) must exceed bin_min ({bin_min})")
    if not bin_width > 0:
        raise BadBinning(f"bin_width must be > 0, got {bin_width}")
    span = bin_max - bin_min
    n = int(round(span / bin_width))
    if n < 1 or abs(n * bin_width - span) > 1e-9 * span:
        raise BadBinning(f"bin_width {bin_width} does not divide [{bin_min}, {bin_max}]")
    return n


def build_histogram(values: Sequence[float], bin_min: float = 0.0, bin_max: float = 1.0,
                    bin_width: float = 0.02) -> EfficiencyHistogram:
    """Bin efficiency values.

    Bins are half-open ``[lo, hi)`` except the last, which also includes
    ``bin_max``. Values outside the range (and NaNs) are dropped from the
    counts but still counted in ``n_total``.
    """
    n = _bin_count(bin_min, bin_max, bin_width)
    values = np.asarray(values, dtype=float).reshape(-1)
    edges = np.linspace(bin_min, bin_max, n + 1)
    inside = values[(values >= bin_min) & (values <= bin_max)]
    counts, _ = np.histogram(inside, bins=edges)
    return EfficiencyHistogram(float(bin_min), float(bin_max), float(bin_width), counts,
                               int(counts.sum()), len(values))


# ---------------------------------------------------------------------------
# damped least squares
# ---------------------------------------------------------------------------

@dataclass
class LMResult:
    params: np.ndarray
    sse: float
    iterations: int
    converged: bool
    at_bound: np.ndarray

    @property
    def pinned(self) -> bool:
        return bool(np.any(self.at_bound))


def _damped_step(A, g, lam, scale, p, lower, upper):
    """Solve the damped normal equations with box bounds (active set).

    Parameters whose step would cross a bound are fixed on that bound and
    the system is re-solved for the rest, including the fixed parameters'
    displacement in the linear model.
    """
    n = len(p)
    free = np.ones(n, dtype=bool)
    delta = np.zeros(n)
    for _ in range(n):
        f = np.flatnonzero(free)
        x = ~free
        M = A[np.ix_(f, f)] + lam * np.diag(scale[f])
        rhs = -(g[f] + A[np.ix_(f, x)] @ delta[x])
        delta[f] = np.linalg.solve(M, rhs)
        trial = p + delta
        hit = free & ((trial < lower) | (trial > upper))
        if not hit.any():
            break
        delta[hit] = np.clip(trial[hit], lower[hit], upper[hit]) - p[hit]
        free &= ~hit
        if not free.any():
            break
    return delta


def levenberg_marquardt(residual: Callable[[np.ndarray], np.ndarray],
                        jacobian: Callable[[np.ndarray], np.ndarray],
                        p0, tol: float = GAUSS_TOL, max_iter: int = GAUSS_MAX_ITER,
                        bounds=None, damping: float = 1e-3) -> LMResult:
    """Minimise ``sum(residual(p)**2)``, optionally inside a box.

    The damped normal equations ``(JᵀJ + λ·diag(JᵀJ)) δ = -Jᵀr`` are solved
    each iteration. Successful steps divide λ by 10, rejected ones multiply
    it by 10. Convergence is declared once a proposed step changes every
    parameter by less than ``tol`` relative to its magnitude.

    Parameters
    ----------
    bounds : (lower, upper), optional
        Box constraints; parameters reaching a bound are held there for the
        step (see :func:`_damped_step`).
    """
    p = np.array(p0, dtype=float)
    if bounds is None:
        lower = np.full(p.shape, -np.inf)
        upper = np.full(p.shape, np.inf)
    else:
        lower = np.broadcast_to(np.asarray(bounds[0], dtype=float), p.shape)
        upper = np.broadcast_to(np.asarray(bounds[1], dtype=float), p.shape)
    p = np.clip(p, lower, upper)

    def result(it, converged):
        return LMResult(p, sse, it, converged, (p <= lower) | (p >= upper))

    r = residual(p)
    sse = float(r @ r)
    lam = damping
    tiny = np.finfo(float).tiny
    for it in range(1, max_iter + 1):
        J = jacobian(p)
        A = J.T @ J
        g = J.T @ r
        scale = np.maximum(np.diag(A), 1e-300)
        while True:
            try:
                delta = _damped_step(A, g, lam, scale, p, lower, upper)
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None and np.all(np.isfinite(delta)):
                p_try = p + delta
                r_try = residual(p_try)
                sse_try = float(r_try @ r_try)
                if np.max(np.abs(delta) / np.maximum(np.abs(p), tiny)) < tol:
                    if sse_try <= sse:
                        p, r, sse = p_try, r_try, sse_try
                    return result(it, True)
                if np.isfinite(sse_try) and sse_try < sse:
                    p, r, sse = p_try, r_try, sse_try
                    lam = max(lam / 10.0, 1e-12)
                    break
            lam *= 10.0
            if lam > 1e16:
                # no descent direction left at this precision
                return result(it, False)
    return result(max_iter, False)


# ---------------------------------------------------------------------------
# Gaussian fit
# ---------------------------------------------------------------------------

def gaussian(x, amplitude, mean, sigma):
    x = np.asarray(x, dtype=float)
    return amplitude * np.exp(-((x - mean) ** 2) / (2.0 * sigma ** 2))


def gaussian_residuals(params, x, y) -> np.ndarray:
    """``y - a*exp(-(x-mu)^2 / 2 sigma^2)`` for ``params = (a, mu, sigma)``."""
    a, mu, sigma = params
    return np.asarray(y, dtype=float) - gaussian(x, a, mu, sigma)


def gaussian_residual_jacobian(params, x) -> np.ndarray:
    """Analytic Jacobian of :func:`gaussian_residuals`, shape ``(len(x), 3)``."""
    a, mu, sigma = params
    x = np.asarray(x, dtype=float)
    dx = x - mu
    e = np.exp(-(dx ** 2) / (2.0 * sigma ** 2))
    m = a * e
    return -np.column_stack((e, m * dx / sigma ** 2, m * dx ** 2 / sigma ** 3))


def initial_gaussian_guess(x, y, bin_width: float) -> np.ndarray:
    """Peak height, modal position and weighted spread (floored at one bin)."""
    x = np.asarray(x, dtype=float)
    w = np.clip(np.asarray(y, dtype=float), 0.0, None)
    mu0 = x[int(np.argmax(w))]
    mean = np.average(x, weights=w)
    sd = np.sqrt(np.average((x - mean) ** 2, weights=w))
    y = w
    return np.array([y.max(), mu0, max(sd, bin_width)])


def fit_gaussian_curve(x, y, bin_width: Optional[float] = None, p0=None,
                       tol: float = GAUSS_TOL, max_iter: int = GAUSS_MAX_ITER) -> GaussianFit:
    """Fit ``a*exp(-(x-mu)^2 / 2 sigma^2)`` to samples ``y`` at positions ``x``.

    The parameters are kept in a box: amplitude >= 0, mean within the
    sampled range, width between ``bin_width / 10`` and the sampled range.
    A fit that ends on the edge of the box is reported as not converged.
    ``bin_width`` (default: smallest spacing of ``x``) sets both the floor of
    the starting width and the collapse limit ``bin_width / 10``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if bin_width is None:
        bin_width = float(np.min(np.diff(np.sort(x)))) if len(x) > 1 else 1.0
    if p0 is None:
        p0 = initial_gaussian_guess(x, y, bin_width)
    lo = float(x.min()) - bin_width / 2
    hi = float(x.max()) + bin_width / 2
    # unbounded, a decaying edge spike is fit best by the tail of an
    # infinitely wide Gaussian centred far outside the data
    bounds = ([0.0, lo, bin_width / 10.0], [np.inf, hi, hi - lo])
    p0 = np.array(p0, dtype=float)
    p0[2] = abs(p0[2])
    res = levenberg_marquardt(
        lambda p: gaussian_residuals(p, x, y),
        lambda p: gaussian_residual_jacobian(p, x),
        p0, tol=tol, max_iter=max_iter, bounds=bounds,
    )
    a, mu, sigma = res.params
    sse = res.sse
    converged = res.converged and not res.pinned
    return GaussianFit(float(a), float(mu), float(sigma), sse, res.iterations, converged)


def fit_gaussian(hist: EfficiencyHistogram, tol: float = GAUSS_TOL,
                 max_iter: int = GAUSS_MAX_ITER) -> GaussianFit:
    """Fit a single Gaussian to histogram counts at the bin centres.

    Unweighted least squares. Start values: modal bin centre, count-weighted
    standard deviation (at least one bin width) and the peak count.

    Returns
    -------
    GaussianFit
        ``converged`` is False if the iteration cap was hit or the width
        collapsed below a tenth of a bin (then clamped to that value).

    Raises
    ------
    DegenerateData
        Fewer than three non-empty bins or fewer than ten binned values.
    """
    nonzero = int(np.count_nonzero(hist.counts))
    if nonzero < 3:
        raise DegenerateData(f"need at least 3 non-empty bins, have {nonzero}")
    if hist.n_in_range < 10:
        raise DegenerateData(f"need at least 10 binned values, have {hist.n_in_range}")
    return fit_gaussian_curve(hist.centers, hist.counts, hist.bin_width, tol=tol,
                              max_iter=max_iter)


# ---------------------------------------------------------------------------
# Forster distance fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ForsterFit:
    r0: float
    residual_sse: float
    converged: bool
    iterations: int = 0

    def __call__(self, r):
        return forster_efficiency(r, self.r0)


def _forster_points(points):
    pts = np.asarray(list(points), dtype=float)
    if pts.size == 0:
        raise EmptyInput("no (r, E) points given")
    pts = pts.reshape(-1, 2)
    r, e = pts[:, 0], pts[:, 1]
    if np.any(~(r > 0)):
        raise NonPositiveDistance("all separations must be > 0")
    bad = np.flatnonzero(~((e > 0) & (e < 1)))
    if len(bad):
        i = int(bad[0])
        raise OutOfDomainPoint(f"point {i + 1} (r={float(r[i])!r}) has E={float(e[i])!r}; "
                               "efficiencies must lie in (0, 1)")
    return r, e


def fit_forster_curve(points: Sequence[tuple], tol: float = FORSTER_TOL,
                      max_iter: int = FORSTER_MAX_ITER) -> ForsterFit:
    """Least-squares Förster distance from ``(r, E)`` pairs.

    Starts from the separation whose efficiency is closest to 0.5 when that
    efficiency lies in (0.2, 0.8), otherwise from the geometric mean of the
    separations.
    """
    r, e = _forster_points(points)
    i = int(np.argmin(np.abs(e - 0.5)))
    r0 = r[i] if 0.2 < e[i] < 0.8 else float(np.exp(np.mean(np.log(r))))

    def residual(p):
        return e - 1.0 / (1.0 + (r / p[0]) ** 6)

    def jacobian(p):
        q = (r / p[0]) ** 6
        # d/dR0 of -1/(1+q) with dq/dR0 = -6q/R0
        return (-6.0 * q / (p[0] * (1.0 + q) ** 2)).reshape(-1, 1)

    res = levenberg_marquardt(residual, jacobian, [r0], tol=tol, max_iter=max_iter,
                              bounds=(np.finfo(float).tiny, np.inf))
    return ForsterFit(float(res.params[0]), res.sse, res.converged, res.iterations)
