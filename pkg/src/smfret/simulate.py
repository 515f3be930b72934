"""Seeded synthetic FRET / ALEX traces with known ground truth.

Photon model, per time bin:

* background counts ``~ Poisson(background_d)`` and ``~ Poisson(background_a)``;
* with probability ``burst_rate`` a molecule contributes ``N`` detected
  photons, ``N ~ Geometric(1 / burst_intensity_mean)`` (support ``N >= 1``);
* the ``N`` photons split binomially into acceptor/donor with acceptor
  probability ``E / (E + (1 - E) / gamma)``, i.e. donor photons are detected
  with relative efficiency ``1 / gamma``. This makes
  ``n_a / (n_a + gamma * n_d)`` an estimator of ``E``;
* crosstalk moves photons between detectors: ``Binomial(n_d, cross_DtoA)``
  donor photons land in the acceptor channel and ``Binomial(n_a, cross_AtoD)``
  the other way, both drawn from the pre-mixing split.

Randomness comes from ``numpy.random.default_rng(seed)`` (PCG64, 128-bit
state); all draws are vectorised in a fixed order, so a seed fully
determines the output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValueOutOfDomain
from .model import AlexTrace, FretTrace, step

SPECIES_NONE = 0
SPECIES_FRET = 1
SPECIES_DONOR_ONLY = 2


@dataclass(frozen=True)
class SimParams:
    n_bins: int = 10000
    burst_rate: float = 0.05
    burst_intensity_mean: float = 60.0
    true_E: float = 0.75
    background_d: float = 0.0
    background_a: float = 0.0
    cross_DtoA: float = 0.0
    cross_AtoD: float = 0.0
    gamma: float = 1.0
    seed: int = 0
    bin_width_ms: float = 1.0

    def __post_init__(self):
        def need(cond, msg):
            if not cond:
                raise ValueOutOfDomain(msg)

        need(int(self.n_bins) == self.n_bins and self.n_bins > 0, "n_bins must be a positive integer")
        need(0 <= self.burst_rate <= 1, "burst_rate must lie in [0, 1]")
        # geometric draws have N >= 1, so the mean cannot be below one photon
        need(self.burst_intensity_mean >= 1, "burst_intensity_mean must be >= 1")
        need(0 <= self.true_E <= 1, "true_E must lie in [0, 1]")
        need(self.background_d >= 0 and self.background_a >= 0, "backgrounds must be >= 0")
        need(0 <= self.cross_DtoA < 1 and 0 <= self.cross_AtoD < 1, "crosstalk must lie in [0, 1)")
        need(self.gamma > 0, "gamma must be > 0")
        need(self.bin_width_ms > 0, "bin_width_ms must be > 0")
        need(int(self.seed) == self.seed, "seed must be an integer")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Per-bin truth. ``n_donor + n_acceptor == n_total`` before crosstalk."""

    species: np.ndarray
    n_total: np.ndarray
    n_donor: np.ndarray
    n_acceptor: np.ndarray
    n_aa: Optional[np.ndarray] = None

    @property
    def burst(self) -> np.ndarray:
        return self.species != SPECIES_NONE


def acceptor_probability(true_E: float, gamma: float) -> float:
    """Probability that a detected burst photon lands in the acceptor channel."""
    if true_E == 0:
        return 0.0
    return true_E / (true_E + (1.0 - true_E) / gamma)


def _donor_excitation(p: SimParams, rng, species):
    n = p.n_bins
    sizes = rng.geometric(1.0 / p.burst_intensity_mean, size=n)
    n_total = np.where(species != SPECIES_NONE, sizes, 0)
    p_acc = np.where(species == SPECIES_FRET, acceptor_probability(p.true_E, p.gamma), 0.0)
    n_acc = rng.binomial(n_total, p_acc)
    n_don = n_total - n_acc
    leak_da = rng.binomial(n_don, p.cross_DtoA)
    leak_ad = rng.binomial(n_acc, p.cross_AtoD)
    donor = n_don - leak_da + leak_ad + rng.poisson(p.background_d, size=n)
    acceptor = n_acc - leak_ad + leak_da + rng.poisson(p.background_a, size=n)
    return donor, acceptor, n_total, n_don, n_acc


def simulate_fret_trace(p: SimParams):
    """Generate a two-channel trace.

    Returns
    -------
    trace : FretTrace
    truth : GroundTruth
    """
    rng = np.random.default_rng(p.seed)
    species = np.where(rng.random(p.n_bins) < p.burst_rate, SPECIES_FRET, SPECIES_NONE)
    donor, acceptor, n_total, n_don, n_acc = _donor_excitation(p, rng, species)
    trace = FretTrace(donor, acceptor, p.bin_width_ms,
                      (step("simulate_fret_trace", seed=int(p.seed)),))
    return trace, GroundTruth(species, n_total, n_don, n_acc)


def simulate_alex_trace(p: SimParams, acceptor_brightness: float,
                        donor_only_fraction: float = 0.0):
    """Generate a four-channel ALEX trace.

    Donor-excitation channels follow the same model as
    :func:`simulate_fret_trace`. Under acceptor excitation, a doubly
    labelled molecule yields ``A_A ~ Poisson(acceptor_brightness * N / mean)``
    so the acceptor signal tracks the burst brightness and averages
    ``acceptor_brightness``. A fraction ``donor_only_fraction`` of the
    molecules carry no acceptor: they show no transfer and no A_A signal.
    ``D_A`` only ever holds donor-detector background.
    """
    if not acceptor_brightness >= 0:
        raise ValueOutOfDomain("acceptor_brightness must be >= 0")
    if not 0 <= donor_only_fraction <= 1:
        raise ValueOutOfDomain("donor_only_fraction must lie in [0, 1]")
    rng = np.random.default_rng(p.seed)
    n = p.n_bins
    is_burst = rng.random(n) < p.burst_rate
    donor_only = rng.random(n) < donor_only_fraction
    species = np.where(is_burst, np.where(donor_only, SPECIES_DONOR_ONLY, SPECIES_FRET),
                       SPECIES_NONE)
    d_d, a_d, n_total, n_don, n_acc = _donor_excitation(p, rng, species)
    aa_mean = np.where(species == SPECIES_FRET,
                       acceptor_brightness * n_total / p.burst_intensity_mean, 0.0)
    n_aa = rng.poisson(aa_mean)
    a_a = n_aa + rng.poisson(p.background_a, size=n)
    d_a = rng.poisson(p.background_d, size=n)
    trace = AlexTrace(d_d, d_a, a_d, a_a, p.bin_width_ms,
                      (step("simulate_alex_trace", seed=int(p.seed)),))
    return trace, GroundTruth(species, n_total, n_don, n_acc, n_aa)
