"""Configuration parsing, defaults and the round-trip invariant."""

import math

import pytest

from ringsim.config import (
    ConfigError,
    default_config,
    format_config,
    load_config,
    parse_config,
)

MINIMAL = """
[run]
duration_s = 60
seed = 7
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.run.duration == 60.0
    assert cfg.run.seed == 7
    assert cfg.resonator.radius == pytest.approx(13.91e-6)
    assert cfg.resonator.q_loaded == pytest.approx(1.24e6)
    assert cfg.signal_chain.path_loss_db == 13.6
    assert cfg.idler_chain.path_loss_db == 19.4
    assert cfg.third_chain.path_loss_db == 19.4
    assert cfg.signal_chain.facet_loss_db == 5.0
    assert cfg.run.window == pytest.approx(4e-9)
    assert cfg.run.bin_width == pytest.approx(100e-12)
    assert cfg.run.correlation_time is None
    assert cfg.franson.sweep_points == 11
    assert cfg.franson.sweep_start == pytest.approx(0.4 * math.pi)
    assert cfg.output.format == "csv"


def test_round_trip_identity():
    cfg = parse_config(MINIMAL)
    assert parse_config(format_config(cfg)) == cfg


def test_round_trip_with_everything_set():
    text = """
[resonator]
radius_um = 30.0
q_loaded = 3.3e6
gamma_eff_per_w_m = 17.25
group_index = 3.52
pump_wavelength_nm = 1550.12
extinction_depth = 0.77

[chains]
signal_path_loss_db = 12.1
signal_dark_rate_hz = 55
idler_jitter_sigma_ps = 25
idler_dead_time_ns = 20
third_path_loss_db = 21.0
third_pump_leak_hz_per_mw = 3.5

[run]
duration_s = 123.5
seed = 99
powers_mw = 0.004, 0.02, 0.1
bin_width_ps = 50
window_ns = 2
max_delay_ns = 80
correlation_time_ns = 0.8

[franson]
path_delay_ns = 40
intrinsic_visibility = 0.9
splitter_ratio = 0.45
phase_noise_rad = 0.01
sweep_start_rad = 0.2
sweep_stop_rad = 4.2
sweep_points = 9
integration_s = 120

[output]
directory = results
format = kv
"""
    cfg = parse_config(text)
    assert cfg.resonator.radius == pytest.approx(30e-6)
    assert cfg.signal_chain.dark_rate == 55.0
    assert cfg.idler_chain.jitter_sigma == pytest.approx(25e-12)
    assert cfg.third_chain.pump_leak_rate_per_w == pytest.approx(3500.0)
    assert cfg.run.powers_w == pytest.approx((4e-6, 2e-5, 1e-4))
    assert cfg.run.correlation_time == pytest.approx(0.8e-9)
    assert cfg.franson.sweep_points == 9
    assert cfg.output.directory == "results"
    assert parse_config(format_config(cfg)) == cfg


def test_missing_required_fields_named():
    with pytest.raises(ConfigError, match="run.duration_s"):
        parse_config("[run]\nseed = 1\n")
    with pytest.raises(ConfigError, match="run.seed"):
        parse_config("[run]\nduration_s = 10\n")
    with pytest.raises(ConfigError, match="run.duration_s"):
        parse_config("")


def test_unknown_sections_and_keys_rejected():
    with pytest.raises(ConfigError, match="unknown config section"):
        parse_config(MINIMAL + "\n[nonsense]\nx = 1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(MINIMAL + "\n[resonator]\nradius_nm = 5\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(MINIMAL + "\n[chains]\nsignal_bogus = 5\n")


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        parse_config("[run]\nduration_s = 10\nseed = 1\n\n[resonator]\nradius_um = -2\n")
    with pytest.raises(ConfigError):
        parse_config("[run]\nduration_s = 10\nseed = abc\n")
    with pytest.raises(ConfigError):
        parse_config("[run]\nduration_s = 10\nseed = 1\npowers_mw = 1.0, -0.5\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[output]\nformat = yaml\n")
    with pytest.raises(ConfigError):
        parse_config("[run]\nduration_s = nan\nseed = 1\n")


def test_window_bin_consistency_enforced():
    with pytest.raises(ConfigError):
        parse_config("[run]\nduration_s = 10\nseed = 1\nwindow_ns = 0.05\nbin_width_ps = 100\n")
    with pytest.raises(ConfigError):
        parse_config("[run]\nduration_s = 10\nseed = 1\nmax_delay_ns = 2\n")


def test_default_config_helper():
    cfg = default_config(seed=5, duration=30.0)
    assert cfg.run.seed == 5
    assert cfg.run.duration == 30.0
    assert parse_config(format_config(cfg)) == cfg


def test_load_config(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(MINIMAL)
    assert load_config(path) == parse_config(MINIMAL)
