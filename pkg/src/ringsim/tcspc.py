"""Coincidence counting and derived metrics from time-tag streams.

The cross-correlation histogram counts every (a, b) tag pair whose delay
b - a falls within +/- max_delay (all-pairs mode; a start-stop mode that
records only the first qualifying stop per trigger is available for
fidelity with hardware counters).  From the histogram the peak window is
summarized into raw coincidences, an accidental estimate taken from bins
far outside the peak, their ratio (CAR), and the background-subtracted
count used for on-chip rate inference.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from ringsim.timetags import TimeTagStream, to_ps

_CHUNK = 1_000_000


class InsufficientStatisticsError(RuntimeError):
    """Raised when a background/denominator estimate has no counts at all."""


@dataclass(frozen=True)
class CoincidenceHistogram:
    """Binned inter-channel delay counts.

    ``delays_ps`` holds uniformly spaced bin centers (spacing
    ``bin_width_ps``) and ``counts`` the tag pairs per bin.
    """

    bin_width_ps: int
    delays_ps: np.ndarray
    counts: np.ndarray
    total_trigger_count: int
    integration_time: float  # [s]

    def __post_init__(self):
        d = np.asarray(self.delays_ps, dtype=np.int64)
        c = np.asarray(self.counts, dtype=np.int64)
        if d.shape != c.shape or d.ndim != 1:
            raise ValueError("delays and counts must be 1-d arrays of equal length")
        if d.size >= 2 and not np.all(np.diff(d) == self.bin_width_ps):
            raise ValueError("bin centers must be uniformly spaced by bin_width_ps")
        if c.size and c.min() < 0:
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "delays_ps", d)
        object.__setattr__(self, "counts", c)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("delay_ps,counts\n")
        for d, c in zip(self.delays_ps, self.counts):
            buf.write(f"{d},{c}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, total_trigger_count: int = 0, integration_time: float = 0.0):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "delay_ps,counts":
            raise ValueError("expected header 'delay_ps,counts'")
        d, c = [], []
        for ln in lines[1:]:
            a, b = ln.split(",")
            d.append(int(a))
            c.append(int(b))
        d = np.asarray(d, dtype=np.int64)
        bw = int(d[1] - d[0]) if d.size >= 2 else 1
        return cls(bw, d, np.asarray(c, dtype=np.int64), total_trigger_count, integration_time)


@dataclass(frozen=True)
class CoincidenceSummary:
    """Peak-window bookkeeping of one histogram.

    ``coincidences`` is the raw in-window count and ``car`` the ratio of
    that raw count to the accidental estimate over the same window.
    ``net_coincidences`` (raw minus accidentals) is what on-chip rate
    inference consumes.
    """

    coincidences: int
    accidentals: float
    net_coincidences: float
    car: float
    window_ps: int
    peak_delay_ps: int
    integration_time: float

    def to_kv(self, pgr_onchip: float | None = None) -> str:
        lines = [
            f"car={self.car:.10g}",
            f"coincidences={self.coincidences}",
            f"accidentals={self.accidentals:.10g}",
            f"net_coincidences={self.net_coincidences:.10g}",
            f"window_ps={self.window_ps}",
            f"peak_delay_ps={self.peak_delay_ps}",
            f"integration_s={self.integration_time:.10g}",
        ]
        if pgr_onchip is not None:
            lines.append(f"pgr_onchip={pgr_onchip:.10g}")
        return "\n".join(lines) + "\n"


def _bin_index(delays: np.ndarray, bw: int) -> np.ndarray:
    # round-half-up of d / bw in exact integer arithmetic
    return (2 * delays + bw) // (2 * bw)


def build_histogram(
    stream_a: TimeTagStream,
    stream_b: TimeTagStream,
    bin_width: float,
    max_delay: float,
    mode: str = "all-pairs",
) -> CoincidenceHistogram:
    """Cross-correlation histogram of delays b - a within +/- max_delay.

    ``max_delay`` is realized as a whole number of bins.  In ``start-stop``
    mode each trigger tag on stream A contributes at most one count: the
    earliest qualifying tag on stream B.
    """
    if mode not in ("all-pairs", "start-stop"):
        raise ValueError(f"unknown histogram mode {mode!r}")
    bw = to_ps(bin_width)
    if bw <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    k_max = int(round(max_delay / bin_width))
    if k_max < 1:
        raise ValueError("max_delay must be at least one bin wide")
    max_ps = k_max * bw
    a = stream_a.timestamps
    b = stream_b.timestamps
    n_bins = 2 * k_max + 1
    hist = np.zeros(n_bins, dtype=np.int64)
    for i0 in range(0, a.size, _CHUNK):
        chunk = a[i0 : i0 + _CHUNK]
        lo = np.searchsorted(b, chunk - max_ps, side="left")
        hi = np.searchsorted(b, chunk + max_ps, side="right")
        if mode == "start-stop":
            has = lo < hi
            d = b[lo[has]] - chunk[has]
        else:
            per = hi - lo
            total = int(per.sum())
            if total == 0:
                continue
            starts = np.repeat(lo, per)
            offsets = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(per) - per, per)
            d = b[starts + offsets] - np.repeat(chunk, per)
        if d.size:
            hist += np.bincount(_bin_index(d, bw) + k_max, minlength=n_bins)
    centers = (np.arange(n_bins, dtype=np.int64) - k_max) * bw
    duration = max(stream_a.duration, stream_b.duration)
    return CoincidenceHistogram(bw, centers, hist, len(stream_a), duration)


def summarize(hist: CoincidenceHistogram, window: float, exclude_delays=()) -> CoincidenceSummary:
    """Peak-window coincidences, accidental estimate and their ratio.

    The window is centered on the histogram peak bin and realized as a
    whole number of bins.  The accidental level is the mean count of bins
    farther than three window widths from the peak (minus any
    ``exclude_delays`` ranges, e.g. interferometer side peaks), scaled to
    the realized window.
    """
    bw = hist.bin_width_ps
    win_ps = to_ps(window)
    if win_ps < bw:
        raise ValueError("window must be at least one bin wide")
    counts = hist.counts
    centers = hist.delays_ps
    if counts.size == 0:
        raise ValueError("empty histogram")
    best = counts.max()
    candidates = np.flatnonzero(counts == best)
    peak_idx = int(candidates[np.argmin(np.abs(centers[candidates]))])
    peak_center = int(centers[peak_idx])

    half_bins = int(round(win_ps / (2 * bw)))
    idx = np.arange(counts.size)
    in_window = np.abs(idx - peak_idx) <= half_bins
    n_win = int(in_window.sum())
    realized_ps = n_win * bw

    background = np.abs(centers - peak_center) > 3 * win_ps
    for lo, hi in exclude_delays:
        background &= ~((centers >= to_ps(lo)) & (centers <= to_ps(hi)))
    if not background.any():
        raise ValueError("no background bins outside 3x window; increase max_delay")
    bg_counts = counts[background]
    if bg_counts.sum() == 0:
        raise InsufficientStatisticsError(
            "all background bins are empty; extend the integration time until accidentals are non-zero"
        )
    acc_per_bin = float(bg_counts.mean())
    accidentals = acc_per_bin * n_win
    raw = int(counts[in_window].sum())
    return CoincidenceSummary(
        coincidences=raw,
        accidentals=accidentals,
        net_coincidences=raw - accidentals,
        car=raw / accidentals,
        window_ps=realized_ps,
        peak_delay_ps=peak_center,
        integration_time=hist.integration_time,
    )


def singles_rate(stream: TimeTagStream, background_rate: float = 0.0) -> float:
    """Background-corrected tag rate [events/s], clamped at zero."""
    if background_rate < 0:
        raise ValueError(f"background_rate must be non-negative, got {background_rate}")
    return max(0.0, stream.rate - background_rate)


def infer_onchip_pgr(
    summary: CoincidenceSummary,
    eta_signal: float,
    eta_idler: float,
    integration_time: float | None = None,
) -> float:
    """On-chip pair rate from background-subtracted coincidences.

    PGR = net coincidences / (eta_s * eta_i * T).  The summary window must
    be wide compared to the pair correlation time, otherwise the truncated
    tail of the coincidence peak biases the result low.
    """
    if not 0.0 < eta_signal <= 1.0 or not 0.0 < eta_idler <= 1.0:
        raise ValueError("efficiencies must lie in (0, 1]")
    t = summary.integration_time if integration_time is None else integration_time
    if not t > 0:
        raise ValueError(f"integration_time must be positive, got {t}")
    return max(0.0, summary.net_coincidences) / (eta_signal * eta_idler * t)


@dataclass(frozen=True)
class ThreefoldCounts:
    n_herald: int
    n_ab: int
    n_ac: int
    n_abc: int

    def to_kv(self, g2: float | None = None, window_ps: int | None = None) -> str:
        lines = [
            f"n_herald={self.n_herald}",
            f"n_ab={self.n_ab}",
            f"n_ac={self.n_ac}",
            f"n_abc={self.n_abc}",
        ]
        if window_ps is not None:
            lines.append(f"window_ps={window_ps}")
        lines.append("g2_heralded=" + (f"{g2:.10g}" if g2 is not None else "nan"))
        return "\n".join(lines) + "\n"

    def __add__(self, other: "ThreefoldCounts") -> "ThreefoldCounts":
        return ThreefoldCounts(
            self.n_herald + other.n_herald,
            self.n_ab + other.n_ab,
            self.n_ac + other.n_ac,
            self.n_abc + other.n_abc,
        )


def count_threefold(
    herald: TimeTagStream,
    idler_b: TimeTagStream,
    idler_c: TimeTagStream,
    window: float,
) -> ThreefoldCounts:
    """Per-herald coincidence bookkeeping within +/- window/2.

    Inter-channel delays are assumed already calibrated out.  A herald
    counts toward n_ab (n_ac) when at least one B (C) tag lies within the
    window, and toward n_abc when both do.
    """
    half = to_ps(window) // 2
    h = herald.timestamps
    n_ab = 0
    n_ac = 0
    n_abc = 0
    for i0 in range(0, h.size, _CHUNK):
        chunk = h[i0 : i0 + _CHUNK]
        has_b = np.searchsorted(idler_b.timestamps, chunk - half, side="left") < np.searchsorted(
            idler_b.timestamps, chunk + half, side="right"
        )
        has_c = np.searchsorted(idler_c.timestamps, chunk - half, side="left") < np.searchsorted(
            idler_c.timestamps, chunk + half, side="right"
        )
        n_ab += int(has_b.sum())
        n_ac += int(has_c.sum())
        n_abc += int((has_b & has_c).sum())
    return ThreefoldCounts(int(h.size), n_ab, n_ac, n_abc)


def g2_heralded(n_herald: int, n_ab: int, n_ac: int, n_abc: int) -> float:
    """Heralded autocorrelation N_abc * N_a / (N_ab * N_ac), raw counts."""
    if n_ab <= 0 or n_ac <= 0:
        raise InsufficientStatisticsError(
            "need non-zero two-fold coincidences on both splitter arms to normalize"
        )
    if n_abc == 0:
        return 0.0
    return (n_abc * n_herald) / (n_ab * n_ac)
