"""Monte Carlo synthesis of detector time-tag streams.

Pair emission is a homogeneous Poisson process at the on-chip rate given
by the resonator model.  Each pair splits into a signal photon at the
emission time and an idler photon offset by a double-sided exponential
delay whose scale is the cavity photon lifetime.  Every channel then
applies its loss budget (Bernoulli survival), a fixed propagation delay,
Gaussian timing jitter, a uniform dark/background merge, and
non-paralyzable dead-time censoring -- in that order.

Two equivalent sampling strategies are provided.  The direct path composes
the steps literally, pair by pair.  For long runs the simulator instead
uses the thinning property of Poisson processes: a Poisson stream thinned
with probability eta is again Poisson at rate eta * lambda, and the joint
fate of a pair factorizes into independent per-photon survivals.  Only
photons that will actually reach a detector are therefore ever generated,
which keeps hour-scale integrations tractable.  The two strategies sample
the same distribution; a fixed seed is reproducible within a strategy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ringsim.resonator import ResonatorSpec, pgr_from_pump
from ringsim.timetags import (
    CHANNEL_IDLER,
    CHANNEL_IDLER_C,
    CHANNEL_SIGNAL,
    PS_PER_S,
    TimeTagStream,
    to_ps,
)

# Above this many expected pairs simulate_* switches to the thinned sampler.
DIRECT_PAIR_LIMIT = 2_000_000

# Upper bound on surviving tags per run; guards against configs that would
# not fit in memory (e.g. default 600 s at mW pump powers).
MAX_DETECTED_EVENTS = 250_000_000

# Generation proceeds in time slabs of roughly this many detected events.
_SLAB_EVENT_BUDGET = 20_000_000


@dataclass(frozen=True)
class DetectionChain:
    """Per-channel loss budget and detector behaviour.

    Losses in dB, dark_rate in events/s, times in seconds.  ``delay`` is a
    fixed propagation delay (unequal filter path lengths shift the
    coincidence peak away from zero).  ``pump_leak_rate_per_w`` adds a
    power-proportional uniform background for residual pump photons that
    reach the detector.
    """

    path_loss_db: float = 0.0
    facet_loss_db: float = 0.0
    detector_efficiency: float = 1.0
    dark_rate: float = 0.0
    jitter_sigma: float = 0.0
    dead_time: float = 0.0
    delay: float = 0.0
    pump_leak_rate_per_w: float = 0.0

    def __post_init__(self):
        if self.path_loss_db < 0 or self.facet_loss_db < 0:
            raise ValueError("loss budgets must be non-negative dB")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError(f"detector_efficiency must lie in (0, 1], got {self.detector_efficiency}")
        if self.dark_rate < 0 or self.jitter_sigma < 0 or self.dead_time < 0:
            raise ValueError("dark_rate, jitter_sigma and dead_time must be non-negative")
        if self.delay < 0 or self.pump_leak_rate_per_w < 0:
            raise ValueError("delay and pump_leak_rate_per_w must be non-negative")
        if not 0.0 < self.survival <= 1.0:
            raise ValueError("total survival probability must lie in (0, 1]")

    @property
    def survival(self) -> float:
        """End-to-end detection probability: efficiency times 10^(-loss/10)."""
        return self.detector_efficiency * 10.0 ** (-(self.path_loss_db + self.facet_loss_db) / 10.0)


def snspd_chain(path_loss_db: float, **overrides) -> DetectionChain:
    """Chain with the default detector assumptions of the test protocols.

    5 dB facet coupling, unit detector efficiency, 100 Hz dark rate,
    17 ps jitter sigma (about 40 ps FWHM) and 50 ns dead time.  The dark
    rate and dead time are assumptions, not measured values.
    """
    kwargs = dict(
        path_loss_db=path_loss_db,
        facet_loss_db=5.0,
        detector_efficiency=1.0,
        dark_rate=100.0,
        jitter_sigma=17e-12,
        dead_time=50e-9,
    )
    kwargs.update(overrides)
    return DetectionChain(**kwargs)


@dataclass(frozen=True)
class SimConfig:
    """Everything one two-detector run needs.

    ``correlation_time`` is the scale of the double-sided exponential
    signal-idler delay; ``None`` selects the cavity lifetime Q/omega_p.
    """

    spec: ResonatorSpec
    pump_power: float  # [W]
    duration: float  # [s]
    signal_chain: DetectionChain = field(default_factory=DetectionChain)
    idler_chain: DetectionChain = field(default_factory=DetectionChain)
    correlation_time: float | None = None  # [s]
    rng_seed: int | tuple = 0

    def __post_init__(self):
        if self.pump_power < 0 or not math.isfinite(self.pump_power):
            raise ValueError(f"pump_power must be non-negative, got {self.pump_power}")
        if self.duration < 0 or not math.isfinite(self.duration):
            raise ValueError(f"duration must be non-negative, got {self.duration}")
        if self.correlation_time is not None and not self.correlation_time > 0:
            raise ValueError(f"correlation_time must be positive, got {self.correlation_time}")

    @property
    def pair_rate(self) -> float:
        """On-chip pair generation rate [pairs/s] at the configured power."""
        return pgr_from_pump(self.spec, self.pump_power)

    @property
    def correlation_time_eff(self) -> float:
        return self.correlation_time if self.correlation_time is not None else self.spec.cavity_lifetime


# ---------------------------------------------------------------------------
# elemental operations


def generate_pair_times(rate: float, duration: float, rng: np.random.Generator) -> np.ndarray:
    """Emission times [int ps] of a homogeneous Poisson process.

    Sampled as a Poisson-distributed count with order-statistics placement
    (uniform times, sorted), which is distribution-identical to exponential
    inter-arrivals.
    """
    if rate < 0 or not math.isfinite(rate):
        raise ValueError(f"rate must be non-negative, got {rate}")
    dur_ps = to_ps(duration)
    if rate == 0.0 or dur_ps == 0:
        return np.empty(0, dtype=np.int64)
    n = rng.poisson(rate * duration)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.integers(0, dur_ps, size=n, dtype=np.int64))


def _pair_delays_ps(n: int, correlation_time: float, rng: np.random.Generator) -> np.ndarray:
    """Double-sided exponential idler-minus-signal delays [int ps]."""
    if n == 0:
        return np.empty(0, dtype=np.int64)
    tau_ps = correlation_time * PS_PER_S
    return np.rint(rng.laplace(0.0, tau_ps, size=n)).astype(np.int64)


def pair_to_photons(emission_time_ps: int, correlation_time: float, rng: np.random.Generator):
    """Split one pair into (signal_ps, idler_ps) tag times.

    The signal carries the emission time; the idler is offset by a
    double-sided exponential delay of scale ``correlation_time``.
    """
    if not correlation_time > 0:
        raise ValueError(f"correlation_time must be positive, got {correlation_time}")
    delta = int(_pair_delays_ps(1, correlation_time, rng)[0])
    t = int(emission_time_ps)
    return t, t + delta


def _censor_dead_time(ts: np.ndarray, dead_ps: int) -> np.ndarray:
    """Non-paralyzable dead time: greedy keep-first over sorted tags."""
    if dead_ps <= 0 or ts.size < 2:
        return ts
    gaps = np.diff(ts)
    if np.all(gaps >= dead_ps):
        return ts
    keep = np.ones(ts.size, dtype=bool)
    # Clusters separated by >= dead_ps gaps are independent: the first tag of
    # each cluster is always kept, so only intra-cluster tags need the scan.
    starts = np.flatnonzero(np.concatenate(([True], gaps >= dead_ps)))
    ends = np.concatenate((starts[1:], [ts.size]))
    for s, e in zip(starts, ends):
        if e - s == 1:
            continue
        last = ts[s]
        for i in range(s + 1, e):
            if ts[i] - last >= dead_ps:
                last = ts[i]
            else:
                keep[i] = False
    return ts[keep]


def _detector_frontend(
    times_ps: np.ndarray,
    chain: DetectionChain,
    duration_ps: int,
    rng: np.random.Generator,
    extra_background_rate: float = 0.0,
) -> np.ndarray:
    """Delay, jitter, background merge, range clip and dead time."""
    t = np.asarray(times_ps, dtype=np.int64)
    if t.size:
        if chain.delay > 0:
            t = t + to_ps(chain.delay)
        if chain.jitter_sigma > 0:
            t = t + np.rint(rng.normal(0.0, chain.jitter_sigma * PS_PER_S, size=t.size)).astype(np.int64)
    bg_rate = chain.dark_rate + extra_background_rate
    if bg_rate > 0 and duration_ps > 0:
        n_bg = rng.poisson(bg_rate * duration_ps / PS_PER_S)
        if n_bg:
            t = np.concatenate((t, rng.integers(0, duration_ps, size=n_bg, dtype=np.int64)))
    t = np.sort(t)
    if t.size:
        t = t[(t >= 0) & (t <= duration_ps)]
    return _censor_dead_time(t, to_ps(chain.dead_time))


def apply_chain(
    photon_times_ps,
    chain: DetectionChain,
    duration: float,
    rng: np.random.Generator,
    channel: int = CHANNEL_SIGNAL,
    extra_background_rate: float = 0.0,
) -> TimeTagStream:
    """Run sorted photon arrival times [int ps] through one detection chain.

    Steps in order: Bernoulli thinning by the chain survival, fixed delay,
    Gaussian jitter, dark/background merge, clip to the recording window,
    dead-time censoring.
    """
    t = np.asarray(photon_times_ps, dtype=np.int64)
    dur_ps = to_ps(duration)
    if t.size:
        t = t[rng.random(t.size) < chain.survival]
    t = _detector_frontend(t, chain, dur_ps, rng, extra_background_rate)
    return TimeTagStream(channel, t, dur_ps)


def split_photons(times_ps, ratio: float, rng: np.random.Generator):
    """Route each photon to output B (probability ``ratio``) or C.

    One photon lands on exactly one output, so the two returned arrays
    partition the input.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"splitter ratio must lie in (0, 1), got {ratio}")
    t = np.asarray(times_ps, dtype=np.int64)
    to_b = rng.random(t.size) < ratio
    return t[to_b], t[~to_b]


# ---------------------------------------------------------------------------
# composed runs


def _slab_edges(duration_ps: int, detected_rate: float) -> np.ndarray:
    expected = detected_rate * duration_ps / PS_PER_S
    n_slabs = max(1, int(math.ceil(expected / _SLAB_EVENT_BUDGET)))
    return np.linspace(0, duration_ps, n_slabs + 1).astype(np.int64)


def _check_budget(detected_rate: float, duration: float):
    expected = detected_rate * duration
    if expected > MAX_DETECTED_EVENTS:
        raise ValueError(
            f"run would produce ~{expected:.2g} detected events "
            f"(budget {MAX_DETECTED_EVENTS:.2g}); lower the pump power or duration"
        )


def _poisson_uniform(rate: float, t0: int, t1: int, rng: np.random.Generator) -> np.ndarray:
    """Poisson-count uniform arrivals on [t0, t1) [int ps], unsorted."""
    if rate <= 0.0 or t1 <= t0:
        return np.empty(0, dtype=np.int64)
    n = rng.poisson(rate * (t1 - t0) / PS_PER_S)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    return rng.integers(t0, t1, size=n, dtype=np.int64)


def _choose_method(method: str, expected_pairs: float) -> str:
    if method not in ("auto", "direct", "thinned"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        return "direct" if expected_pairs <= DIRECT_PAIR_LIMIT else "thinned"
    return method


def simulate_two_channel(config: SimConfig, method: str = "auto"):
    """Full two-detector run: (signal stream, idler stream) on one clock."""
    rng = np.random.default_rng(config.rng_seed)
    rate = config.pair_rate
    tau = config.correlation_time_eff
    dur_ps = to_ps(config.duration)
    s_chain, i_chain = config.signal_chain, config.idler_chain
    leak_s = s_chain.pump_leak_rate_per_w * config.pump_power
    leak_i = i_chain.pump_leak_rate_per_w * config.pump_power
    eta_s, eta_i = s_chain.survival, i_chain.survival
    _check_budget(rate * (eta_s + eta_i) + s_chain.dark_rate + i_chain.dark_rate + leak_s + leak_i, config.duration)

    picked = _choose_method(method, rate * config.duration)
    if picked == "direct":
        pairs = generate_pair_times(rate, config.duration, rng)
        deltas = _pair_delays_ps(pairs.size, tau, rng)
        sig = apply_chain(pairs, s_chain, config.duration, rng, CHANNEL_SIGNAL, leak_s)
        idl = apply_chain(pairs + deltas, i_chain, config.duration, rng, CHANNEL_IDLER, leak_i)
        return sig, idl

    # Thinned sampling: only detected photons are generated.  The joint pair
    # fate factorizes into three independent Poisson processes.
    rate_both = rate * eta_s * eta_i
    rate_s_only = rate * eta_s * (1.0 - eta_i)
    rate_i_only = rate * (1.0 - eta_s) * eta_i
    sig_parts, idl_parts = [], []
    edges = _slab_edges(dur_ps, rate * (eta_s + eta_i))
    for t0, t1 in zip(edges[:-1], edges[1:]):
        t_both = _poisson_uniform(rate_both, t0, t1, rng)
        d_both = _pair_delays_ps(t_both.size, tau, rng)
        sig_parts.append(t_both)
        idl_parts.append(t_both + d_both)
        sig_parts.append(_poisson_uniform(rate_s_only, t0, t1, rng))
        t_i = _poisson_uniform(rate_i_only, t0, t1, rng)
        idl_parts.append(t_i + _pair_delays_ps(t_i.size, tau, rng))
    sig_raw = np.concatenate(sig_parts)
    idl_raw = np.concatenate(idl_parts)
    sig = TimeTagStream(CHANNEL_SIGNAL, _detector_frontend(sig_raw, s_chain, dur_ps, rng, leak_s), dur_ps)
    idl = TimeTagStream(CHANNEL_IDLER, _detector_frontend(idl_raw, i_chain, dur_ps, rng, leak_i), dur_ps)
    return sig, idl


def simulate_three_channel(
    config: SimConfig,
    splitter_ratio: float = 0.5,
    chain_b: DetectionChain | None = None,
    chain_c: DetectionChain | None = None,
    method: str = "auto",
):
    """Heralded-autocorrelation topology: (herald, idler B, idler C).

    Idler photons pass a beam splitter and land on exactly one of two
    detectors before their chains; the 3 dB splitting loss per output is the
    routing itself.  Chains B and C default to the configured idler chain.
    """
    if not 0.0 < splitter_ratio < 1.0:
        raise ValueError(f"splitter_ratio must lie in (0, 1), got {splitter_ratio}")
    chain_b = chain_b if chain_b is not None else config.idler_chain
    chain_c = chain_c if chain_c is not None else config.idler_chain
    rng = np.random.default_rng(config.rng_seed)
    rate = config.pair_rate
    tau = config.correlation_time_eff
    dur_ps = to_ps(config.duration)
    s_chain = config.signal_chain
    leak = [c.pump_leak_rate_per_w * config.pump_power for c in (s_chain, chain_b, chain_c)]
    eta_h = s_chain.survival
    eta_b, eta_c = chain_b.survival, chain_c.survival
    p_b = splitter_ratio * eta_b
    p_c = (1.0 - splitter_ratio) * eta_c
    _check_budget(
        rate * (eta_h + p_b + p_c) + s_chain.dark_rate + chain_b.dark_rate + chain_c.dark_rate + sum(leak),
        config.duration,
    )

    picked = _choose_method(method, rate * config.duration)
    if picked == "direct":
        pairs = generate_pair_times(rate, config.duration, rng)
        idlers = pairs + _pair_delays_ps(pairs.size, tau, rng)
        t_b, t_c = split_photons(idlers, splitter_ratio, rng)
        herald = apply_chain(pairs, s_chain, config.duration, rng, CHANNEL_SIGNAL, leak[0])
        idl_b = apply_chain(t_b, chain_b, config.duration, rng, CHANNEL_IDLER, leak[1])
        idl_c = apply_chain(t_c, chain_c, config.duration, rng, CHANNEL_IDLER_C, leak[2])
        return herald, idl_b, idl_c

    # Joint pair fate: herald detected or not x idler routed/detected on B, C
    # or lost.  Enumerating the detected combinations keeps B and C disjoint
    # by construction.
    combos = {
        "hb": rate * eta_h * p_b,
        "hc": rate * eta_h * p_c,
        "h": rate * eta_h * (1.0 - p_b - p_c),
        "b": rate * (1.0 - eta_h) * p_b,
        "c": rate * (1.0 - eta_h) * p_c,
    }
    herald_parts, b_parts, c_parts = [], [], []
    edges = _slab_edges(dur_ps, rate * (eta_h + p_b + p_c))
    for t0, t1 in zip(edges[:-1], edges[1:]):
        for name, r in combos.items():
            t = _poisson_uniform(r, t0, t1, rng)
            if "h" in name:
                herald_parts.append(t)
            if name.endswith("b"):
                b_parts.append(t + _pair_delays_ps(t.size, tau, rng))
            elif name.endswith("c"):
                c_parts.append(t + _pair_delays_ps(t.size, tau, rng))
    herald = TimeTagStream(
        CHANNEL_SIGNAL, _detector_frontend(np.concatenate(herald_parts), s_chain, dur_ps, rng, leak[0]), dur_ps
    )
    idl_b = TimeTagStream(
        CHANNEL_IDLER, _detector_frontend(np.concatenate(b_parts), chain_b, dur_ps, rng, leak[1]), dur_ps
    )
    idl_c = TimeTagStream(
        CHANNEL_IDLER_C, _detector_frontend(np.concatenate(c_parts), chain_c, dur_ps, rng, leak[2]), dur_ps
    )
    return herald, idl_b, idl_c
