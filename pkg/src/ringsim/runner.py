"""End-to-end experiment orchestration.

Every public function takes an :class:`ExperimentConfig`, runs the
simulation/analysis pipeline and returns plain dictionaries that both the
HTTP service and the command-line client serialize unchanged.  Per-power
and per-phase runs derive child seeds from the configured base seed, so a
whole scenario is reproducible from (config, seed) alone.
"""

from __future__ import annotations

import math

import numpy as np

from ringsim import franson as fr
from ringsim import tcspc
from ringsim.config import ExperimentConfig
from ringsim.eventsim import SimConfig, simulate_three_channel, simulate_two_channel
from ringsim.platforms import brightness_ratios, format_table, isoline_csv
from ringsim.resonator import brightness, free_spectral_range, linewidth, pgr_from_pump
from ringsim.timetags import TimeTagStream, read_timetags, write_timetags


def _sim_config(cfg: ExperimentConfig, power_w: float, seed) -> SimConfig:
    return SimConfig(
        spec=cfg.resonator,
        pump_power=power_w,
        duration=cfg.run.duration,
        signal_chain=cfg.signal_chain,
        idler_chain=cfg.idler_chain,
        correlation_time=cfg.run.correlation_time,
        rng_seed=seed,
    )


def run_pgr(cfg: ExperimentConfig) -> dict:
    """Resonator figures of merit and the rate at each configured power."""
    spec = cfg.resonator
    lw = linewidth(spec)
    pgr_1mw = pgr_from_pump(spec, 1e-3)
    rows = [
        {"power_mw": p / 1e-3, "pgr_pairs_per_s": pgr_from_pump(spec, p)}
        for p in cfg.run.powers_w
    ]
    return {
        "pgr_per_mw2": pgr_1mw,
        "fwhm_pm": lw.fwhm_wavelength / 1e-12,
        "fwhm_ghz": lw.fwhm_frequency / 1e9,
        "fsr_nm": free_spectral_range(spec) / 1e-9,
        "brightness_pairs_per_s_per_ghz": brightness(pgr_1mw, lw.fwhm_frequency),
        "cavity_lifetime_ns": spec.cavity_lifetime / 1e-9,
        "rows": rows,
    }


def _analyze_pair_run(cfg: ExperimentConfig, power_w: float, sig: TimeTagStream, idl: TimeTagStream) -> dict:
    s_chain, i_chain = cfg.signal_chain, cfg.idler_chain
    bg_s = s_chain.dark_rate + s_chain.pump_leak_rate_per_w * power_w
    bg_i = i_chain.dark_rate + i_chain.pump_leak_rate_per_w * power_w
    row = {
        "power_mw": power_w / 1e-3,
        "pgr_expected": pgr_from_pump(cfg.resonator, power_w),
        "singles_signal_hz": tcspc.singles_rate(sig, bg_s),
        "singles_idler_hz": tcspc.singles_rate(idl, bg_i),
        "coincidences": None,
        "accidentals": None,
        "car": None,
        "pgr_onchip": None,
        "insufficient_statistics": False,
    }
    hist = tcspc.build_histogram(sig, idl, cfg.run.bin_width, cfg.run.max_delay)
    try:
        summary = tcspc.summarize(hist, cfg.run.window)
    except tcspc.InsufficientStatisticsError:
        row["insufficient_statistics"] = True
        return row
    row["coincidences"] = summary.coincidences
    row["accidentals"] = summary.accidentals
    row["car"] = summary.car
    row["pgr_onchip"] = tcspc.infer_onchip_pgr(summary, s_chain.survival, i_chain.survival)
    return row


def run_simulate(cfg: ExperimentConfig, include_timetags: bool = True) -> dict:
    """Two-detector power sweep: per-power tag files and a summary table."""
    rows = []
    files = {}
    for i, power in enumerate(cfg.run.powers_w):
        sig, idl = simulate_two_channel(_sim_config(cfg, power, (cfg.run.seed, i)))
        rows.append(_analyze_pair_run(cfg, power, sig, idl))
        if include_timetags:
            name = f"timetags_{i:02d}_{power / 1e-3:g}mW.txt"
            files[name] = write_timetags([sig, idl])
    return {"rows": rows, "files": files}


def run_franson(cfg: ExperimentConfig) -> dict:
    """Phase sweep behind the interferometer plus visibility extraction."""
    fs = cfg.franson
    power = cfg.run.powers_w[0]
    sim = SimConfig(
        spec=cfg.resonator,
        pump_power=power,
        duration=fs.integration,
        signal_chain=cfg.signal_chain,
        idler_chain=cfg.idler_chain,
        correlation_time=cfg.run.correlation_time,
        rng_seed=(cfg.run.seed,),
    )
    phases = np.linspace(fs.sweep_start, fs.sweep_stop, fs.sweep_points)
    sweep = fr.phase_sweep(sim, fs.config(), phases, window=cfg.run.window)
    vis = fr.extract_visibility(sweep)
    # degenerate sweeps carry an infinite uncertainty, which JSON cannot hold
    sigma_v = vis.sigma_v if math.isfinite(vis.sigma_v) else None
    bell = fr.bell_violation(vis.v_fit, vis.sigma_v) if sigma_v is not None else None
    return {
        "sweep_csv": sweep.to_csv(),
        "phases_rad": [float(p) for p in sweep.phases],
        "coincidences": [int(c) for c in sweep.coincidences],
        "accidentals": [float(a) for a in sweep.accidentals],
        "singles_signal": [int(s) for s in sweep.singles_signal],
        "singles_idler": [int(s) for s in sweep.singles_idler],
        "v_raw": vis.v_raw,
        "v_fit": vis.v_fit,
        "sigma_v": sigma_v,
        "bell_sigmas": bell,
    }


def run_g2h(cfg: ExperimentConfig) -> dict:
    """Three-detector heralded autocorrelation at the first configured power."""
    power = cfg.run.powers_w[0]
    sim = SimConfig(
        spec=cfg.resonator,
        pump_power=power,
        duration=cfg.run.duration,
        signal_chain=cfg.signal_chain,
        idler_chain=cfg.idler_chain,
        correlation_time=cfg.run.correlation_time,
        rng_seed=(cfg.run.seed, 0),
    )
    herald, idl_b, idl_c = simulate_three_channel(
        sim, chain_b=cfg.idler_chain, chain_c=cfg.third_chain
    )
    counts = tcspc.count_threefold(herald, idl_b, idl_c, cfg.run.window)
    report = {
        "power_mw": power / 1e-3,
        "n_herald": counts.n_herald,
        "n_ab": counts.n_ab,
        "n_ac": counts.n_ac,
        "n_abc": counts.n_abc,
        "window_ps": int(round(cfg.run.window * 1e12)),
        "g2_heralded": None,
        "insufficient_statistics": False,
    }
    try:
        report["g2_heralded"] = tcspc.g2_heralded(counts.n_herald, counts.n_ab, counts.n_ac, counts.n_abc)
    except tcspc.InsufficientStatisticsError:
        report["insufficient_statistics"] = True
    return report


def run_compare(include_isolines: bool = True) -> dict:
    """The embedded platform benchmark table and brightness ratios."""
    out = {
        "platforms_csv": format_table(),
        "brightness_ratios": brightness_ratios(),
    }
    if include_isolines:
        out["isolines_csv"] = isoline_csv()
    return out


def run_replay(cfg: ExperimentConfig, file_text: str) -> dict:
    """Analyze an externally produced time-tag file.

    Two channels give singles, the coincidence summary and the inferred
    on-chip rate (using the configured chain efficiencies); a third channel
    adds threefold counts and the heralded autocorrelation.
    """
    streams = read_timetags(file_text)
    if not streams:
        raise ValueError("time-tag file contains no events")
    report: dict = {"channels": sorted(streams), "duration_s": next(iter(streams.values())).duration}
    bg = {0: cfg.signal_chain.dark_rate, 1: cfg.idler_chain.dark_rate, 2: cfg.third_chain.dark_rate}
    report["singles_hz"] = {
        str(c): tcspc.singles_rate(s, bg.get(c, 0.0)) for c, s in streams.items()
    }
    if 0 in streams and 1 in streams:
        hist = tcspc.build_histogram(streams[0], streams[1], cfg.run.bin_width, cfg.run.max_delay)
        try:
            summary = tcspc.summarize(hist, cfg.run.window)
            report["summary"] = {
                "car": summary.car,
                "coincidences": summary.coincidences,
                "accidentals": summary.accidentals,
                "net_coincidences": summary.net_coincidences,
                "window_ps": summary.window_ps,
                "integration_s": summary.integration_time,
                "pgr_onchip": tcspc.infer_onchip_pgr(
                    summary, cfg.signal_chain.survival, cfg.idler_chain.survival
                ),
            }
            report["insufficient_statistics"] = False
        except tcspc.InsufficientStatisticsError:
            report["summary"] = None
            report["insufficient_statistics"] = True
    if all(c in streams for c in (0, 1, 2)):
        counts = tcspc.count_threefold(streams[0], streams[1], streams[2], cfg.run.window)
        report["threefold"] = {
            "n_herald": counts.n_herald,
            "n_ab": counts.n_ab,
            "n_ac": counts.n_ac,
            "n_abc": counts.n_abc,
        }
        try:
            report["threefold"]["g2_heralded"] = tcspc.g2_heralded(
                counts.n_herald, counts.n_ab, counts.n_ac, counts.n_abc
            )
        except tcspc.InsufficientStatisticsError:
            report["threefold"]["g2_heralded"] = None
            report["insufficient_statistics"] = True
    return report
