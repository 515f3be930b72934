"""Analysis of time-binned single-molecule FRET and ALEX photon data."""

from .analysis import (
    EfficiencyHistogram,
    ForsterFit,
    GaussianFit,
    alex_fret_efficiency,
    build_histogram,
    burst_efficiencies,
    fit_forster_curve,
    fit_gaussian,
    forster_efficiency,
    fret_efficiency,
    proximity_ratio,
    stoichiometry,
)
from .correct import subtract_background, subtract_background_alex, subtract_crosstalk
from .io import parse_config, parse_csv
from .model import (
    AlexTrace,
    Burst,
    BurstSet,
    CorrectionParams,
    FretTrace,
    new_alex_trace,
    new_fret_trace,
)
from .select import threshold_alex, threshold_and, threshold_or, threshold_sum
from .simulate import SimParams, simulate_alex_trace, simulate_fret_trace

__version__ = "0.1.0"
