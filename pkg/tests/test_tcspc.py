"""Histogramming, CAR summary, rate inference and threefold counting.

The histogram oracle is a literal O(N^2) pairing loop; count bookkeeping
must match it exactly.
"""

import math

import numpy as np
import pytest

from conftest import make_sim

from ringsim.eventsim import simulate_two_channel
from ringsim.tcspc import (
    CoincidenceHistogram,
    InsufficientStatisticsError,
    build_histogram,
    count_threefold,
    g2_heralded,
    infer_onchip_pgr,
    singles_rate,
    summarize,
)
from ringsim.timetags import TimeTagStream


def _stream(channel, times, duration_ps):
    return TimeTagStream(channel, np.asarray(sorted(times), dtype=np.int64), duration_ps)


def brute_force_histogram(a, b, bw_ps, k_max):
    """All-pairs reference: one bin per qualifying delay."""
    max_ps = k_max * bw_ps
    counts = [0] * (2 * k_max + 1)
    for ta in a:
        for tb in b:
            d = tb - ta
            if -max_ps <= d <= max_ps:
                k = (2 * d + bw_ps) // (2 * bw_ps)
                counts[k + k_max] += 1
    return counts


def brute_force_start_stop(a, b, bw_ps, k_max):
    max_ps = k_max * bw_ps
    counts = [0] * (2 * k_max + 1)
    for ta in a:
        best = None
        for tb in b:
            d = tb - ta
            if -max_ps <= d <= max_ps:
                best = d if best is None else best
                break
        if best is not None:
            k = (2 * best + bw_ps) // (2 * bw_ps)
            counts[k + k_max] += 1
    return counts


def test_histogram_single_shifted_bin():
    # tag spacing far above max_delay: only the true partner qualifies
    a = _stream(0, range(0, 100_000_000, 1_000_000), 200_000_000)
    b = TimeTagStream(1, a.timestamps + 1000, 200_000_000)
    hist = build_histogram(a, b, bin_width=100e-12, max_delay=5e-9)
    populated = hist.delays_ps[hist.counts > 0]
    assert populated.tolist() == [1000]
    assert hist.counts.sum() == 100
    assert hist.total_trigger_count == 100


def test_histogram_matches_brute_force_random(rng):
    for trial in range(5):
        local = np.random.default_rng(900 + trial)
        na, nb = local.integers(50, 400, 2)
        a = _stream(0, local.integers(0, 50_000, na), 60_000)
        b = _stream(1, local.integers(0, 50_000, nb), 60_000)
        hist = build_histogram(a, b, bin_width=700e-12, max_delay=7e-9)
        k_max = int(round(7e-9 / 700e-12))
        expect = brute_force_histogram(a.timestamps.tolist(), b.timestamps.tolist(), 700, k_max)
        assert hist.counts.tolist() == expect
        # conservation: every qualifying pair lands in exactly one bin
        assert hist.counts.sum() == sum(expect)


def test_histogram_start_stop_matches_brute_force(rng):
    for trial in range(3):
        local = np.random.default_rng(800 + trial)
        a = _stream(0, local.integers(0, 50_000, 200), 60_000)
        b = _stream(1, local.integers(0, 50_000, 300), 60_000)
        hist = build_histogram(a, b, 500e-12, 5e-9, mode="start-stop")
        expect = brute_force_start_stop(a.timestamps.tolist(), b.timestamps.tolist(), 500, 10)
        assert hist.counts.tolist() == expect


def test_histogram_empty_stream_all_zero():
    a = _stream(0, [], 1000)
    b = _stream(1, [10, 20], 1000)
    hist = build_histogram(a, b, 100e-12, 1e-9)
    assert hist.counts.sum() == 0


def test_histogram_independent_streams_flat():
    rng = np.random.default_rng(77)
    dur_s = 10.0
    dur_ps = int(dur_s * 1e12)
    r1, r2 = 5_000.0, 8_000.0
    a = _stream(0, rng.integers(0, dur_ps, int(r1 * dur_s)), dur_ps)
    b = _stream(1, rng.integers(0, dur_ps, int(r2 * dur_s)), dur_ps)
    hist = build_histogram(a, b, 10e-9, 2e-6)
    level = r1 * r2 * 10e-9 * dur_s  # expected pairs per bin
    pulls = (hist.counts - level) / math.sqrt(level)
    assert abs(pulls.mean()) < 3 / math.sqrt(hist.counts.size)
    assert (np.abs(pulls) > 3).mean() < 0.015


def test_histogram_csv_round_trip():
    a = _stream(0, [100, 300], 1000)
    b = _stream(1, [150, 350], 1000)
    hist = build_histogram(a, b, 100e-12, 1e-9)
    text = hist.to_csv()
    back = CoincidenceHistogram.from_csv(text)
    assert np.array_equal(back.counts, hist.counts)
    assert np.array_equal(back.delays_ps, hist.delays_ps)


def test_summarize_flat_histogram_car_one():
    n = 401
    centers = (np.arange(n) - n // 2) * 100
    hist = CoincidenceHistogram(100, centers, np.full(n, 7, dtype=np.int64), 0, 1.0)
    summ = summarize(hist, window=4e-9)
    assert summ.car == pytest.approx(1.0, rel=1e-12)
    assert summ.net_coincidences == pytest.approx(0.0, abs=1e-9)


def test_summarize_peak_ratio_reproduced():
    # single peak bin 4389x the accidental level, single-bin window
    n = 2001
    centers = (np.arange(n) - n // 2) * 100
    counts = np.full(n, 10, dtype=np.int64)
    counts[n // 2] = 43890
    hist = CoincidenceHistogram(100, centers, counts, 0, 1.0)
    summ = summarize(hist, window=100e-12)
    assert summ.car == pytest.approx(4389.0, rel=1e-12)
    assert summ.peak_delay_ps == 0


def test_summarize_window_follows_peak():
    n = 801
    centers = (np.arange(n) - n // 2) * 100
    counts = np.zeros(n, dtype=np.int64)
    counts[n // 2 + 50] = 500  # peak at +5 ns
    counts[::7] += 2  # sparse background
    hist = CoincidenceHistogram(100, centers, counts, 0, 1.0)
    summ = summarize(hist, window=1e-9)
    assert summ.peak_delay_ps == 5000


def test_summarize_insufficient_accidentals():
    n = 801
    centers = (np.arange(n) - n // 2) * 100
    counts = np.zeros(n, dtype=np.int64)
    counts[n // 2] = 100
    hist = CoincidenceHistogram(100, centers, counts, 0, 1.0)
    with pytest.raises(InsufficientStatisticsError):
        summarize(hist, window=4e-9)


def test_summarize_needs_background_region():
    n = 41
    centers = (np.arange(n) - n // 2) * 100
    hist = CoincidenceHistogram(100, centers, np.ones(n, dtype=np.int64), 0, 1.0)
    with pytest.raises(ValueError, match="background"):
        summarize(hist, window=4e-9)


def test_summarize_exclude_zones():
    n = 2001
    centers = (np.arange(n) - n // 2) * 100
    counts = np.full(n, 5, dtype=np.int64)
    counts[n // 2] = 1000
    lump = np.abs(centers - 60_000) <= 2000
    counts[lump] += 400  # a side structure that must not pollute the background
    hist = CoincidenceHistogram(100, centers, counts, 0, 1.0)
    biased = summarize(hist, window=4e-9)
    clean = summarize(hist, window=4e-9, exclude_delays=[(55e-9, 65e-9)])
    assert clean.accidentals < biased.accidentals
    assert clean.accidentals == pytest.approx(5 * 41, rel=1e-12)


def test_summarize_peak_offset_from_unequal_delays():
    cfg = make_sim(2e6, 20.0, 30, dead_time=0.0)
    from dataclasses import replace

    cfg = replace(cfg, idler_chain=replace(cfg.idler_chain, delay=5e-9))
    sig, idl = simulate_two_channel(cfg)
    hist = build_histogram(sig, idl, 100e-12, 100e-9)
    summ = summarize(hist, 4e-9)
    assert abs(summ.peak_delay_ps - 5000) <= 200


def test_singles_rate_background_subtraction():
    s = _stream(0, np.linspace(0, 6e14 - 1, 1_000_000), int(6e14))
    assert singles_rate(s, 100.0) == pytest.approx(1e6 / 600.0 - 100.0, rel=1e-9)
    assert singles_rate(s, 1e9) == 0.0
    with pytest.raises(ValueError):
        singles_rate(s, -1.0)


def test_infer_onchip_pgr_identity():
    # unit efficiencies: inferred rate equals net coincidence rate
    n = 401
    centers = (np.arange(n) - n // 2) * 100
    counts = np.full(n, 2, dtype=np.int64)
    counts[n // 2] = 1002
    hist = CoincidenceHistogram(100, centers, counts, 0, 10.0)
    summ = summarize(hist, window=100e-12)
    pgr = infer_onchip_pgr(summ, 1.0, 1.0)
    assert pgr == pytest.approx(summ.net_coincidences / 10.0, rel=1e-12)
    with pytest.raises(ValueError):
        infer_onchip_pgr(summ, 0.0, 1.0)


def test_count_threefold_basic_cases():
    h = _stream(0, [10_000], 100_000)
    b = _stream(1, [11_000], 100_000)
    c = _stream(2, [9_500], 100_000)
    counts = count_threefold(h, b, c, window=4e-9)
    assert (counts.n_herald, counts.n_ab, counts.n_ac, counts.n_abc) == (1, 1, 1, 1)
    empty = _stream(1, [], 100_000)
    counts = count_threefold(h, empty, empty, window=4e-9)
    assert (counts.n_ab, counts.n_ac, counts.n_abc) == (0, 0, 0)


def test_count_threefold_window_edges():
    h = _stream(0, [10_000], 100_000)
    inside = _stream(1, [10_000 + 2000], 100_000)  # exactly +window/2
    outside = _stream(2, [10_000 + 2001], 100_000)
    counts = count_threefold(h, inside, outside, window=4e-9)
    assert counts.n_ab == 1
    assert counts.n_ac == 0


def test_g2_heralded_arithmetic():
    assert g2_heralded(10**6, 10**3, 10**3, 0) == 0.0
    assert g2_heralded(10**6, 10**3, 10**3, 1) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(InsufficientStatisticsError):
        g2_heralded(10**6, 0, 10**3, 0)
    with pytest.raises(InsufficientStatisticsError):
        g2_heralded(10**6, 10**3, 0, 1)


def test_g2_heralded_arm_exchange_symmetry():
    assert g2_heralded(5_000_000, 1200, 800, 3) == g2_heralded(5_000_000, 800, 1200, 3)


def test_summary_serialization():
    n = 401
    centers = (np.arange(n) - n // 2) * 100
    counts = np.full(n, 3, dtype=np.int64)
    counts[n // 2] = 300
    hist = CoincidenceHistogram(100, centers, counts, 12345, 7.5)
    summ = summarize(hist, window=1e-9)
    text = summ.to_kv(pgr_onchip=1.25e6)
    assert "car=" in text and "window_ps=" in text and "pgr_onchip=1250000" in text
    assert f"integration_s=7.5" in text
