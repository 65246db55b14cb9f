"""Folded unbalanced-interferometer model for two-photon interference.

Each photon of a pair independently takes the short path (no shift) or the
long path (shifted by the path delay), giving four route permutations.
SL and LS pairs land in side peaks offset by +/- the path delay and never
interfere.  SS and LL pairs are indistinguishable and land in the central
peak, where two-photon interference keeps a pair time-correlated with
probability (1 + V cos(phase)) / 2.

A pair that loses the interference draw is not deleted -- that would make
the singles rates swing with the phase, which a setup operated with the
path delay longer than the single-photon coherence time does not show.
Instead its idler is re-timed uniformly over the run, removing the pair
from the central peak while conserving photon flux on both detectors.
Interferometer port losses are common mode and belong in the channel loss
budgets.

Long runs use the same thinned sampling strategy as the base simulator;
per-pair phase noise is marginalized analytically there (a Gaussian jitter
of width sigma on the phase scales the visibility by exp(-sigma^2/2),
exactly, because pairs are independent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ringsim.eventsim import (
    SimConfig,
    _check_budget,
    _choose_method,
    _detector_frontend,
    _pair_delays_ps,
    _poisson_uniform,
    _slab_edges,
    generate_pair_times,
)
from ringsim.fitting import FitResult, fit_sinusoid
from ringsim.tcspc import CoincidenceHistogram, build_histogram
from ringsim.timetags import CHANNEL_IDLER, CHANNEL_SIGNAL, TimeTagStream, to_ps

# 7 m of single-mode fiber at group index 1.468.
DEFAULT_PATH_DELAY = 7.0 * 1.468 / 299792458.0  # [s] ~= 34.28 ns

# Residual phase jitter of a servo locked to better than lambda/100.
DEFAULT_PHASE_NOISE = 2.0 * math.pi / 100.0

BELL_THRESHOLD = 1.0 / math.sqrt(2.0)

PATH_LABELS = ("SS", "SL", "LS", "LL")


@dataclass(frozen=True)
class FransonConfig:
    """Interferometer settings.

    The path delay must be much longer than the pair correlation time (no
    single-photon interference) and shorter than the pump coherence time,
    which is taken as infinite for a continuous-wave pump.
    """

    path_delay: float = DEFAULT_PATH_DELAY  # [s]
    phase: float = 0.0  # [rad]
    intrinsic_visibility: float = 0.971
    splitter_ratio: float = 0.5
    phase_noise_sigma: float = DEFAULT_PHASE_NOISE  # [rad]

    def __post_init__(self):
        if not self.path_delay > 0:
            raise ValueError(f"path_delay must be positive, got {self.path_delay}")
        if not 0.0 <= self.intrinsic_visibility <= 1.0:
            raise ValueError(f"intrinsic_visibility must lie in [0, 1], got {self.intrinsic_visibility}")
        if not 0.0 < self.splitter_ratio < 1.0:
            raise ValueError(f"splitter_ratio must lie in (0, 1), got {self.splitter_ratio}")
        if self.phase_noise_sigma < 0:
            raise ValueError(f"phase_noise_sigma must be non-negative, got {self.phase_noise_sigma}")

    @property
    def effective_visibility(self) -> float:
        """Visibility after marginalizing the Gaussian phase jitter."""
        return self.intrinsic_visibility * math.exp(-0.5 * self.phase_noise_sigma**2)


@dataclass(frozen=True)
class RoutedPair:
    """A pair after path routing, with shifted tag times [ps]."""

    label: str
    signal_time: int
    idler_time: int

    @property
    def central(self) -> bool:
        return self.label in ("SS", "LL")


def route_pair(signal_time: int, idler_time: int, config: FransonConfig, rng: np.random.Generator) -> RoutedPair:
    """Send each photon down the short or long arm with equal probability."""
    s_long = bool(rng.random() < config.splitter_ratio)
    i_long = bool(rng.random() < config.splitter_ratio)
    shift = to_ps(config.path_delay)
    label = ("L" if s_long else "S") + ("L" if i_long else "S")
    return RoutedPair(
        label,
        int(signal_time) + (shift if s_long else 0),
        int(idler_time) + (shift if i_long else 0),
    )


def interfere_central(pair: RoutedPair, config: FransonConfig, rng: np.random.Generator) -> bool:
    """Two-photon interference draw for an indistinguishable SS/LL pair.

    Returns True when the pair stays time-correlated (kept in the central
    peak), with probability (1 + V cos(phase + noise)) / 2.  Side-peak
    labels are rejected: SL and LS pairs bypass interference entirely.
    """
    if not pair.central:
        raise ValueError(f"interference applies to SS/LL pairs only, got {pair.label}")
    phase = config.phase
    if config.phase_noise_sigma > 0:
        phase = phase + rng.normal(0.0, config.phase_noise_sigma)
    p_keep = 0.5 * (1.0 + config.intrinsic_visibility * math.cos(phase))
    return bool(rng.random() < p_keep)


def _franson_streams(sim: SimConfig, franson: FransonConfig, method: str = "auto"):
    """Signal and idler tag streams behind the interferometer."""
    rng = np.random.default_rng(sim.rng_seed)
    rate = sim.pair_rate
    tau = sim.correlation_time_eff
    dur_ps = to_ps(sim.duration)
    shift = to_ps(franson.path_delay)
    s_chain, i_chain = sim.signal_chain, sim.idler_chain
    leak_s = s_chain.pump_leak_rate_per_w * sim.pump_power
    leak_i = i_chain.pump_leak_rate_per_w * sim.pump_power
    eta_s, eta_i = s_chain.survival, i_chain.survival
    _check_budget(rate * (eta_s + eta_i) + s_chain.dark_rate + i_chain.dark_rate + leak_s + leak_i, sim.duration)

    picked = _choose_method(method, rate * sim.duration)
    if picked == "direct":
        pairs = generate_pair_times(rate, sim.duration, rng)
        n = pairs.size
        sig_t = pairs.copy()
        idl_t = pairs + _pair_delays_ps(n, tau, rng)
        s_long = rng.random(n) < franson.splitter_ratio
        i_long = rng.random(n) < franson.splitter_ratio
        sig_t[s_long] += shift
        idl_t[i_long] += shift
        central = s_long == i_long
        n_c = int(central.sum())
        if n_c:
            phase = franson.phase + (
                rng.normal(0.0, franson.phase_noise_sigma, size=n_c) if franson.phase_noise_sigma > 0 else 0.0
            )
            keep = rng.random(n_c) < 0.5 * (1.0 + franson.intrinsic_visibility * np.cos(phase))
            decorrelate = np.flatnonzero(central)[~keep]
            if decorrelate.size and dur_ps > 0:
                idl_t[decorrelate] = rng.integers(0, dur_ps, size=decorrelate.size, dtype=np.int64)
        sig_stream = TimeTagStream(
            CHANNEL_SIGNAL,
            _detector_frontend(sig_t[rng.random(n) < eta_s], s_chain, dur_ps, rng, leak_s),
            dur_ps,
        )
        idl_stream = TimeTagStream(
            CHANNEL_IDLER,
            _detector_frontend(idl_t[rng.random(n) < eta_i], i_chain, dur_ps, rng, leak_i),
            dur_ps,
        )
        return sig_stream, idl_stream

    # Thinned sampling over the route/interference classes.  q is the
    # noise-marginalized keep probability of an SS/LL pair.
    q = 0.5 * (1.0 + franson.effective_visibility * math.cos(franson.phase))
    quarter = rate / 4.0
    # correlated classes: (rate, signal shift, idler shift)
    corr = [
        (quarter, 0, shift),  # SL
        (quarter, shift, 0),  # LS
        (quarter * q, 0, 0),  # SS kept
        (quarter * q, shift, shift),  # LL kept
    ]
    sig_parts, idl_parts = [], []
    edges = _slab_edges(dur_ps, rate * (eta_s + eta_i))
    for t0, t1 in zip(edges[:-1], edges[1:]):
        for r, s_shift, i_shift in corr:
            t_both = _poisson_uniform(r * eta_s * eta_i, t0, t1, rng)
            sig_parts.append(t_both + s_shift)
            idl_parts.append(t_both + _pair_delays_ps(t_both.size, tau, rng) + i_shift)
            sig_parts.append(_poisson_uniform(r * eta_s * (1.0 - eta_i), t0, t1, rng) + s_shift)
            t_i = _poisson_uniform(r * (1.0 - eta_s) * eta_i, t0, t1, rng)
            idl_parts.append(t_i + _pair_delays_ps(t_i.size, tau, rng) + i_shift)
        # decorrelated SS/LL remainders: the two photons are independent,
        # the idler lands uniformly anywhere in the run
        for s_shift in (0, shift):
            sig_parts.append(_poisson_uniform(quarter * (1.0 - q) * eta_s, t0, t1, rng) + s_shift)
            idl_parts.append(_poisson_uniform(quarter * (1.0 - q) * eta_i, t0, t1, rng))
    sig_stream = TimeTagStream(
        CHANNEL_SIGNAL, _detector_frontend(np.concatenate(sig_parts), s_chain, dur_ps, rng, leak_s), dur_ps
    )
    idl_stream = TimeTagStream(
        CHANNEL_IDLER, _detector_frontend(np.concatenate(idl_parts), i_chain, dur_ps, rng, leak_i), dur_ps
    )
    return sig_stream, idl_stream


def simulate_franson(
    sim: SimConfig,
    franson: FransonConfig,
    bin_width: float = 100e-12,
    max_delay: float | None = None,
    method: str = "auto",
) -> CoincidenceHistogram:
    """Three-peak interference histogram (side peaks at +/- path delay)."""
    if max_delay is None:
        max_delay = franson.path_delay + 16e-9
    sig, idl = _franson_streams(sim, franson, method)
    return build_histogram(sig, idl, bin_width, max_delay)


def _pairs_in_band(a: np.ndarray, b: np.ndarray, lo_ps: int, hi_ps: int) -> int:
    """Tag pairs with (b - a) in [lo_ps, hi_ps]."""
    left = np.searchsorted(b, a + lo_ps, side="left")
    right = np.searchsorted(b, a + hi_ps, side="right")
    return int((right - left).sum())


def _central_window_count(sig: TimeTagStream, idl: TimeTagStream, window: float, path_delay: float):
    """Raw central-window coincidences and their accidental estimate.

    The background is sampled from delay bands between the central and side
    peaks (3 window widths away from zero on both sides, clear of the
    correlated tail and of the +/- path-delay peaks) and scaled to the
    window width.
    """
    a = sig.timestamps
    b = idl.timestamps
    half = to_ps(window) // 2
    raw = _pairs_in_band(a, b, -half, half)
    band_lo = 3 * to_ps(window)
    band_hi = min(8 * to_ps(window), to_ps(path_delay) - 3 * to_ps(window))
    if band_hi <= band_lo:
        raise ValueError("path_delay too short to place a background band beside the central peak")
    bg = _pairs_in_band(a, b, band_lo, band_hi) + _pairs_in_band(a, b, -band_hi, -band_lo)
    accidentals = bg * (2 * half + 1) / (2 * (band_hi - band_lo + 1))
    return raw, accidentals


@dataclass(frozen=True)
class PhaseSweep:
    """Per-phase central-window coincidences at fixed integration time.

    ``coincidences`` are raw in-window counts; ``accidentals`` the sideband
    background estimate over the same window, whose subtraction removes the
    phase-independent offset before visibility fitting.
    """

    phases: np.ndarray  # [rad]
    coincidences: np.ndarray
    accidentals: np.ndarray
    singles_signal: np.ndarray
    singles_idler: np.ndarray
    integration_time: float  # [s] per phase point
    window: float  # [s]

    @property
    def net_coincidences(self) -> np.ndarray:
        return self.coincidences - self.accidentals

    def to_csv(self) -> str:
        lines = ["phase_rad,coincidences,singles_signal,singles_idler,accidentals"]
        for p, c, ss, si, acc in zip(
            self.phases, self.coincidences, self.singles_signal, self.singles_idler, self.accidentals
        ):
            lines.append(f"{p:.10g},{c},{ss},{si},{acc:.10g}")
        return "\n".join(lines) + "\n"


def phase_sweep(
    sim: SimConfig,
    franson: FransonConfig,
    phases,
    window: float = 4e-9,
    method: str = "auto",
) -> PhaseSweep:
    """Repeat the interference run over a list of phases.

    Phase points are independent runs with seeds derived from the base
    seed, merged in phase order.
    """
    phases = np.asarray(list(phases), dtype=float)
    if phases.size < 5:
        raise ValueError(f"need at least 5 phase points, got {phases.size}")
    coincidences = np.zeros(phases.size, dtype=np.int64)
    accidentals = np.zeros(phases.size, dtype=float)
    singles_s = np.zeros(phases.size, dtype=np.int64)
    singles_i = np.zeros(phases.size, dtype=np.int64)
    base_seed = sim.rng_seed if isinstance(sim.rng_seed, (list, tuple)) else (sim.rng_seed,)
    for k, phi in enumerate(phases):
        cfg_k = SimConfig(
            spec=sim.spec,
            pump_power=sim.pump_power,
            duration=sim.duration,
            signal_chain=sim.signal_chain,
            idler_chain=sim.idler_chain,
            correlation_time=sim.correlation_time,
            rng_seed=tuple(base_seed) + (k,),
        )
        fr_k = FransonConfig(
            path_delay=franson.path_delay,
            phase=float(phi),
            intrinsic_visibility=franson.intrinsic_visibility,
            splitter_ratio=franson.splitter_ratio,
            phase_noise_sigma=franson.phase_noise_sigma,
        )
        sig, idl = _franson_streams(cfg_k, fr_k, method)
        coincidences[k], accidentals[k] = _central_window_count(sig, idl, window, franson.path_delay)
        singles_s[k] = len(sig)
        singles_i[k] = len(idl)
    return PhaseSweep(phases, coincidences, accidentals, singles_s, singles_i, sim.duration, window)


@dataclass(frozen=True)
class VisibilityResult:
    v_raw: float
    v_fit: float
    sigma_v: float
    fit: FitResult

    def to_kv(self, bell_sigmas: float | None = None) -> str:
        lines = [
            f"v_raw={self.v_raw:.10g}",
            f"v_fit={self.v_fit:.10g}",
            f"sigma_v={self.sigma_v:.10g}",
        ]
        if bell_sigmas is not None:
            lines.append(f"bell_sigmas={bell_sigmas:.10g}")
        return "\n".join(lines) + "\n"


def extract_visibility(sweep: PhaseSweep) -> VisibilityResult:
    """Raw (extrema) and fitted (sinusoid) visibility of a phase sweep.

    Works on background-subtracted counts.  ``v_fit`` is amplitude/offset
    of the unit-frequency sinusoid fit, with its standard error propagated
    from the fit covariance.  A constant sweep yields zero visibility; its
    relative uncertainty is then infinite and the fit carries the
    phase-origin-undetermined flag.
    """
    counts = np.asarray(sweep.net_coincidences, dtype=float)
    total = counts.max() + counts.min()
    v_raw = float((counts.max() - counts.min()) / total) if total > 0 else 0.0
    fit = fit_sinusoid(sweep.phases, counts)
    offset = fit.parameters["offset"]
    amplitude = fit.parameters["amplitude"]
    if offset <= 0:
        return VisibilityResult(v_raw, 0.0, math.inf, fit)
    v_fit = amplitude / offset
    cov = fit.covariance
    var_v = (
        cov[1, 1] / offset**2
        + amplitude**2 / offset**4 * cov[0, 0]
        - 2.0 * amplitude / offset**3 * cov[0, 1]
    )
    sigma_v = math.sqrt(max(var_v, 0.0)) if np.isfinite(var_v) else math.inf
    return VisibilityResult(v_raw, v_fit, sigma_v, fit)


def bell_violation(v: float, sigma_v: float) -> float:
    """Standard deviations by which v exceeds the 1/sqrt(2) threshold."""
    if not sigma_v > 0:
        raise ValueError(f"sigma_v must be positive, got {sigma_v}")
    return (v - BELL_THRESHOLD) / sigma_v
