"""Immutable containers for binned photon traces, selected bursts and
correction parameters.

Channel data live in read-only ``float64`` numpy arrays. Counts are real
valued because background and crosstalk subtraction produce fractions.
Every transformation elsewhere in the package returns a new object; the
``history`` attribute records the steps that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import (
    EmptyTrace,
    FractionOutOfRange,
    LengthMismatch,
    NegativeCount,
    NegativeParameter,
)

ALEX_CHANNELS = ("d_d", "d_a", "a_d", "a_a")


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True).reshape(-1)
    if not np.all(arr >= 0):
        # also catches NaN
        raise NegativeCount(f"channel {name!r} contains negative or non-finite counts")
    arr.flags.writeable = False
    return arr


def _channels(names: Sequence[str], values: Sequence) -> list[np.ndarray]:
    arrays = []
    for name, v in zip(names, values):
        arr = np.asarray(v, dtype=float).reshape(-1)
        arrays.append(arr)
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        detail = ", ".join(f"{n}={len(a)}" for n, a in zip(names, arrays))
        raise LengthMismatch(f"channel lengths differ ({detail})")
    if lengths == {0}:
        raise EmptyTrace("trace has no time bins")
    return [_frozen_array(a, n) for n, a in zip(names, arrays)]


def _check_bin_width(bin_width_ms: float) -> float:
    bin_width_ms = float(bin_width_ms)
    if not bin_width_ms > 0:
        raise NegativeParameter(f"bin_width_ms must be > 0, got {bin_width_ms}")
    return bin_width_ms


def step(name: str, **params) -> tuple:
    """Build one hashable history entry."""
    return (name, tuple(sorted(params.items())))


def _arrays_equal(a, b) -> bool:
    if a is None or b is None:
        return a is b
    return a.shape == b.shape and bool(np.array_equal(a, b))


@dataclass(frozen=True, eq=False)
class FretTrace:
    """Donor and acceptor photon counts per time bin."""

    donor: np.ndarray
    acceptor: np.ndarray
    bin_width_ms: float = 1.0
    history: tuple = ()

    def __post_init__(self):
        donor, acceptor = _channels(("donor", "acceptor"), (self.donor, self.acceptor))
        object.__setattr__(self, "donor", donor)
        object.__setattr__(self, "acceptor", acceptor)
        object.__setattr__(self, "bin_width_ms", _check_bin_width(self.bin_width_ms))
        object.__setattr__(self, "history", tuple(self.history))

    def __len__(self):
        return len(self.donor)

    def __eq__(self, other):
        if not isinstance(other, FretTrace):
            return NotImplemented
        return (_arrays_equal(self.donor, other.donor)
                and _arrays_equal(self.acceptor, other.acceptor)
                and self.bin_width_ms == other.bin_width_ms)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class AlexTrace:
    """Four ALEX channels per time bin.

    ``d_d``/``a_d`` are the donor and acceptor detectors during donor
    excitation, ``d_a``/``a_a`` the same detectors during acceptor
    excitation.
    """

    d_d: np.ndarray
    d_a: np.ndarray
    a_d: np.ndarray
    a_a: np.ndarray
    bin_width_ms: float = 1.0
    history: tuple = ()

    def __post_init__(self):
        arrays = _channels(ALEX_CHANNELS, [getattr(self, n) for n in ALEX_CHANNELS])
        for name, arr in zip(ALEX_CHANNELS, arrays):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "bin_width_ms", _check_bin_width(self.bin_width_ms))
        object.__setattr__(self, "history", tuple(self.history))

    def __len__(self):
        return len(self.d_d)

    def __eq__(self, other):
        if not isinstance(other, AlexTrace):
            return NotImplemented
        return (all(_arrays_equal(getattr(self, n), getattr(other, n)) for n in ALEX_CHANNELS)
                and self.bin_width_ms == other.bin_width_ms)

    __hash__ = None

    def donor_excitation(self) -> FretTrace:
        """The (D_D, A_D) pair viewed as a plain two-channel trace."""
        return FretTrace(self.d_d, self.a_d, self.bin_width_ms,
                         self.history + (step("donor_excitation_view"),))


def new_fret_trace(donor, acceptor, bin_width_ms: float = 1.0) -> FretTrace:
    """Validate and copy two count sequences into a :class:`FretTrace`.

    Raises
    ------
    LengthMismatch, NegativeCount, EmptyTrace
    """
    return FretTrace(donor, acceptor, bin_width_ms)


def new_alex_trace(d_d, d_a, a_d, a_a, bin_width_ms: float = 1.0) -> AlexTrace:
    """Validate and copy four count sequences into an :class:`AlexTrace`."""
    return AlexTrace(d_d, d_a, a_d, a_a, bin_width_ms)


@dataclass(frozen=True)
class Burst:
    """One selected time bin.

    For ALEX bursts ``donor_counts``/``acceptor_counts`` hold D_D and A_D,
    and the acceptor-excitation channels are filled in.
    """

    donor_counts: float
    acceptor_counts: float
    source_bin_index: int
    a_a_counts: Optional[float] = None
    d_a_counts: Optional[float] = None

    @property
    def is_alex(self) -> bool:
        return self.a_a_counts is not None


@dataclass(frozen=True, eq=False)
class BurstSet:
    """Selected events stored column-wise.

    Iterating yields :class:`Burst` objects; the array attributes are the
    efficient path for numerical work.
    """

    donor: np.ndarray
    acceptor: np.ndarray
    index: np.ndarray
    a_a: Optional[np.ndarray] = None
    d_a: Optional[np.ndarray] = None
    provenance: tuple = field(default=())

    def __post_init__(self):
        donor = _frozen_array(self.donor, "donor")
        acceptor = _frozen_array(self.acceptor, "acceptor")
        index = np.array(self.index, dtype=np.int64, copy=True).reshape(-1)
        if not (len(donor) == len(acceptor) == len(index)):
            raise LengthMismatch("burst columns differ in length")
        if len(index) and (index[0] < 0 or np.any(np.diff(index) <= 0)):
            raise ValueError("source_bin_index must be non-negative and strictly increasing")
        index.flags.writeable = False
        if (self.a_a is None) != (self.d_a is None):
            raise ValueError("ALEX bursts need both a_a and d_a columns")
        object.__setattr__(self, "donor", donor)
        object.__setattr__(self, "acceptor", acceptor)
        object.__setattr__(self, "index", index)
        if self.a_a is not None:
            a_a = _frozen_array(self.a_a, "a_a")
            d_a = _frozen_array(self.d_a, "d_a")
            if not len(a_a) == len(d_a) == len(index):
                raise LengthMismatch("burst columns differ in length")
            object.__setattr__(self, "a_a", a_a)
            object.__setattr__(self, "d_a", d_a)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def is_alex(self) -> bool:
        return self.a_a is not None

    def __len__(self):
        return len(self.index)

    def __getitem__(self, i: int) -> Burst:
        if self.is_alex:
            return Burst(float(self.donor[i]), float(self.acceptor[i]), int(self.index[i]),
                         float(self.a_a[i]), float(self.d_a[i]))
        return Burst(float(self.donor[i]), float(self.acceptor[i]), int(self.index[i]))

    def __iter__(self) -> Iterator[Burst]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, BurstSet):
            return NotImplemented
        return (_arrays_equal(self.donor, other.donor)
                and _arrays_equal(self.acceptor, other.acceptor)
                and _arrays_equal(self.index, other.index)
                and _arrays_equal(self.a_a, other.a_a)
                and _arrays_equal(self.d_a, other.d_a))

    __hash__ = None

    @classmethod
    def from_bursts(cls, bursts: Sequence[Burst], provenance: tuple = ()) -> "BurstSet":
        bursts = list(bursts)
        alex = bool(bursts) and bursts[0].is_alex
        cols = dict(
            donor=[b.donor_counts for b in bursts],
            acceptor=[b.acceptor_counts for b in bursts],
            index=[b.source_bin_index for b in bursts],
        )
        if alex:
            cols["a_a"] = [b.a_a_counts for b in bursts]
            cols["d_a"] = [b.d_a_counts for b in bursts]
        return cls(provenance=provenance, **cols)


@dataclass(frozen=True)
class CorrectionParams:
    """Experimentally determined correction factors and selection thresholds."""

    auto_donor: float = 0.0
    auto_acceptor: float = 0.0
    cross_DtoA: float = 0.0
    cross_AtoD: float = 0.0
    gamma: float = 1.0
    t_donor: float = 0.0
    t_acceptor: float = 0.0

    def __post_init__(self):
        for name in ("auto_donor", "auto_acceptor", "t_donor", "t_acceptor"):
            check_nonnegative(name, getattr(self, name))
        for name in ("cross_DtoA", "cross_AtoD"):
            check_fraction(name, getattr(self, name))
        if not self.gamma > 0:
            raise NegativeParameter(f"gamma must be > 0, got {self.gamma}")


def check_nonnegative(name: str, value: float) -> float:
    value = float(value)
    if not value >= 0:
        raise NegativeParameter(f"{name} must be >= 0, got {value}")
    return value


def check_fraction(name: str, value: float) -> float:
    value = float(value)
    if not 0 <= value < 1:
        raise FractionOutOfRange(f"{name} must lie in [0, 1), got {value}")
    return value
