"""Background and crosstalk subtraction.

All subtractions clamp at zero: a negative photon count has no meaning and
the efficiency estimators downstream assume non-negative inputs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .model import (
    ALEX_CHANNELS,
    AlexTrace,
    BurstSet,
    FretTrace,
    check_fraction,
    check_nonnegative,
    step,
)


def _clamped(values: np.ndarray, offset) -> np.ndarray:
    return np.maximum(values - offset, 0.0)


def subtract_background(trace: FretTrace, auto_donor: float, auto_acceptor: float) -> FretTrace:
    """Remove mean autofluorescence from every time bin.

    Parameters
    ----------
    trace : FretTrace
    auto_donor, auto_acceptor : float
        Mean background photons per bin in each channel (>= 0).

    Returns
    -------
    FretTrace
        New trace with ``max(0, x - auto)`` in each channel.
    """
    auto_donor = check_nonnegative("auto_donor", auto_donor)
    auto_acceptor = check_nonnegative("auto_acceptor", auto_acceptor)
    return FretTrace(
        _clamped(trace.donor, auto_donor),
        _clamped(trace.acceptor, auto_acceptor),
        trace.bin_width_ms,
        trace.history + (step("subtract_background",
                              auto_donor=auto_donor, auto_acceptor=auto_acceptor),),
    )


def subtract_background_alex(trace: AlexTrace, auto: Sequence[float]) -> AlexTrace:
    """Per-channel background subtraction for ALEX data.

    ``auto`` lists the four backgrounds in channel order (D_D, D_A, A_D, A_A).
    """
    auto = list(auto)
    if len(auto) != 4:
        raise ValueError("ALEX background needs exactly four values")
    auto = [check_nonnegative(f"auto_{n}", a) for n, a in zip(ALEX_CHANNELS, auto)]
    channels = [_clamped(getattr(trace, n), a) for n, a in zip(ALEX_CHANNELS, auto)]
    return AlexTrace(
        *channels,
        bin_width_ms=trace.bin_width_ms,
        history=trace.history + (step("subtract_background_alex",
                                      **dict(zip(ALEX_CHANNELS, auto))),),
    )


def subtract_crosstalk(bursts: BurstSet, cross_DtoA: float, cross_AtoD: float) -> BurstSet:
    """Remove donor/acceptor crosstalk from selected bursts.

    Both corrections use the uncorrected pair ``(d, a)``::

        a' = max(0, a - cross_DtoA * d)
        d' = max(0, d - cross_AtoD * a)

    so the result does not depend on which correction is "applied first".
    For ALEX bursts the donor-excitation pair (D_D, A_D) is corrected and
    the acceptor-excitation channels pass through untouched.
    """
    cross_DtoA = check_fraction("cross_DtoA", cross_DtoA)
    cross_AtoD = check_fraction("cross_AtoD", cross_AtoD)
    d, a = bursts.donor, bursts.acceptor
    return BurstSet(
        donor=_clamped(d, cross_AtoD * a),
        acceptor=_clamped(a, cross_DtoA * d),
        index=bursts.index,
        a_a=bursts.a_a,
        d_a=bursts.d_a,
        provenance=bursts.provenance + (step("subtract_crosstalk",
                                             cross_DtoA=cross_DtoA, cross_AtoD=cross_AtoD),),
    )
