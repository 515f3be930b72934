"""Event selection by photon-count thresholds.

A time bin counts as an event when its counts lie strictly *above* the
threshold(s); ties are rejected. Each selected bin becomes one burst and
adjacent selected bins are never merged.
"""

from __future__ import annotations

import numpy as np

from .model import AlexTrace, BurstSet, FretTrace, check_nonnegative, step


def _from_mask(trace: FretTrace, mask: np.ndarray, entry: tuple) -> BurstSet:
    idx = np.flatnonzero(mask)
    return BurstSet(
        donor=trace.donor[idx],
        acceptor=trace.acceptor[idx],
        index=idx,
        provenance=trace.history + (entry,),
    )


def threshold_and(trace: FretTrace, t_donor: float, t_acceptor: float) -> BurstSet:
    """Select bins where both donor and acceptor exceed their thresholds."""
    t_donor = check_nonnegative("t_donor", t_donor)
    t_acceptor = check_nonnegative("t_acceptor", t_acceptor)
    mask = (trace.donor > t_donor) & (trace.acceptor > t_acceptor)
    return _from_mask(trace, mask, step("threshold_and", t_donor=t_donor, t_acceptor=t_acceptor))


def threshold_or(trace: FretTrace, t_donor: float, t_acceptor: float) -> BurstSet:
    """Select bins where either channel exceeds its threshold."""
    t_donor = check_nonnegative("t_donor", t_donor)
    t_acceptor = check_nonnegative("t_acceptor", t_acceptor)
    mask = (trace.donor > t_donor) | (trace.acceptor > t_acceptor)
    return _from_mask(trace, mask, step("threshold_or", t_donor=t_donor, t_acceptor=t_acceptor))


def threshold_sum(trace: FretTrace, t_sum: float) -> BurstSet:
    """Select bins whose total photon count exceeds ``t_sum``."""
    t_sum = check_nonnegative("t_sum", t_sum)
    mask = (trace.donor + trace.acceptor) > t_sum
    return _from_mask(trace, mask, step("threshold_sum", t_sum=t_sum))


def threshold_alex(trace: AlexTrace, t_dex: float, t_aex: float) -> BurstSet:
    """ALEX event selection.

    A bin is kept when the donor-excitation total ``D_D + A_D`` exceeds
    ``t_dex`` *and* the directly excited acceptor signal ``A_A`` exceeds
    ``t_aex``. Requiring acceptor emission under acceptor excitation
    discards donor-only molecules; requiring donor-excitation photons
    discards acceptor-only ones.

    Returns
    -------
    BurstSet
        ALEX burst set; ``donor``/``acceptor`` hold D_D and A_D.
    """
    t_dex = check_nonnegative("t_dex", t_dex)
    t_aex = check_nonnegative("t_aex", t_aex)
    mask = ((trace.d_d + trace.a_d) > t_dex) & (trace.a_a > t_aex)
    idx = np.flatnonzero(mask)
    return BurstSet(
        donor=trace.d_d[idx],
        acceptor=trace.a_d[idx],
        index=idx,
        a_a=trace.a_a[idx],
        d_a=trace.d_a[idx],
        provenance=trace.history + (step("threshold_alex", t_dex=t_dex, t_aex=t_aex),),
    )
