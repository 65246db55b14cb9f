"""Microring entangled-photon-pair source simulator and analysis toolkit.

The package is organized around the life cycle of a pair-generation
experiment:

* :mod:`ringsim.resonator` -- closed-form ring physics (pair generation
  rate, linewidth, free spectral range, Lorentzian transmission).
* :mod:`ringsim.eventsim` -- Monte Carlo synthesis of detector time-tag
  streams (Poisson pair emission, loss, jitter, dark counts, dead time).
* :mod:`ringsim.tcspc` -- coincidence histograms, CAR, on-chip rate
  inference and heralded autocorrelation from time-tag streams.
* :mod:`ringsim.franson` -- folded unbalanced-interferometer model for
  two-photon interference and visibility extraction.
* :mod:`ringsim.fitting` -- Lorentzian / power-law / sinusoid least squares.
* :mod:`ringsim.service` / :mod:`ringsim.cli` -- FastAPI front end and the
  thin command-line client.
"""

from ringsim.resonator import (
    C_VACUUM,
    DEFAULT_GAMMA_EFF,
    DEFAULT_GROUP_INDEX,
    ResonatorSpec,
    TransmissionTrace,
    algaas_ring,
    brightness,
    calibrate_gamma,
    free_spectral_range,
    linewidth,
    lorentzian_transmission,
    pgr_from_pump,
    synthesize_trace,
)
from ringsim.timetags import TimeTagStream, read_timetags, write_timetags
from ringsim.eventsim import (
    DetectionChain,
    SimConfig,
    apply_chain,
    generate_pair_times,
    pair_to_photons,
    simulate_three_channel,
    simulate_two_channel,
    snspd_chain,
    split_photons,
)
from ringsim.tcspc import (
    CoincidenceHistogram,
    CoincidenceSummary,
    InsufficientStatisticsError,
    ThreefoldCounts,
    build_histogram,
    count_threefold,
    g2_heralded,
    infer_onchip_pgr,
    singles_rate,
    summarize,
)
from ringsim.franson import (
    FransonConfig,
    PhaseSweep,
    RoutedPair,
    bell_violation,
    extract_visibility,
    interfere_central,
    phase_sweep,
    route_pair,
    simulate_franson,
)
from ringsim.fitting import (
    FitResult,
    NoResonanceError,
    NotConvergedError,
    fit_lorentzian,
    fit_power_law,
    fit_sinusoid,
)
from ringsim.config import ConfigError, ExperimentConfig, default_config, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "C_VACUUM",
    "DEFAULT_GAMMA_EFF",
    "DEFAULT_GROUP_INDEX",
    "ResonatorSpec",
    "TransmissionTrace",
    "algaas_ring",
    "brightness",
    "calibrate_gamma",
    "free_spectral_range",
    "linewidth",
    "lorentzian_transmission",
    "pgr_from_pump",
    "synthesize_trace",
    "TimeTagStream",
    "read_timetags",
    "write_timetags",
    "DetectionChain",
    "SimConfig",
    "apply_chain",
    "generate_pair_times",
    "pair_to_photons",
    "simulate_three_channel",
    "simulate_two_channel",
    "snspd_chain",
    "split_photons",
    "CoincidenceHistogram",
    "CoincidenceSummary",
    "InsufficientStatisticsError",
    "ThreefoldCounts",
    "build_histogram",
    "count_threefold",
    "g2_heralded",
    "infer_onchip_pgr",
    "singles_rate",
    "summarize",
    "FransonConfig",
    "PhaseSweep",
    "RoutedPair",
    "bell_violation",
    "extract_visibility",
    "interfere_central",
    "phase_sweep",
    "route_pair",
    "simulate_franson",
    "FitResult",
    "NoResonanceError",
    "NotConvergedError",
    "fit_lorentzian",
    "fit_power_law",
    "fit_sinusoid",
    "ConfigError",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "parse_config",
]
