"""Experiment configuration: a sectioned, human-editable key=value format.

Keys carry their units as suffixes (radius_um, dark_rate_hz, window_ns) so
a file is unambiguous without a manual.  Parsing is strict: unknown keys
and missing required fields raise :class:`ConfigError` naming the field.
A parse -> serialize -> parse round trip reproduces the configuration
exactly.

Example::

    [resonator]
    radius_um = 13.91
    q_loaded = 1.24e6

    [run]
    duration_s = 60
    seed = 1
    powers_mw = 0.003, 0.006, 0.012

All physics fields have documented defaults (the AlGaAsOI device and its
measurement chains); only run.duration_s and run.seed are required.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, replace

from ringsim.eventsim import DetectionChain, snspd_chain
from ringsim.franson import DEFAULT_PATH_DELAY, DEFAULT_PHASE_NOISE, FransonConfig
from ringsim.resonator import ResonatorSpec, algaas_ring


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunSettings:
    duration: float  # [s]
    seed: int
    powers_w: tuple = (3e-6, 5e-6, 8e-6, 12e-6, 20e-6)
    bin_width: float = 100e-12  # [s]
    window: float = 4e-9  # [s]
    max_delay: float = 100e-9  # [s]
    correlation_time: float | None = None  # [s]; None -> cavity lifetime

    def __post_init__(self):
        if not self.duration >= 0:
            raise ConfigError(f"run.duration_s must be non-negative, got {self.duration}")
        if any(p < 0 for p in self.powers_w):
            raise ConfigError("run.powers_mw entries must be non-negative")
        if not self.bin_width > 0:
            raise ConfigError(f"run.bin_width_ps must be positive, got {self.bin_width}")
        if self.window < self.bin_width:
            raise ConfigError("run.window_ns must be at least one bin wide")
        if self.max_delay < self.window:
            raise ConfigError("run.max_delay_ns must be at least the window")


@dataclass(frozen=True)
class FransonSettings:
    path_delay: float = DEFAULT_PATH_DELAY  # [s]
    intrinsic_visibility: float = 0.971
    splitter_ratio: float = 0.5
    phase_noise_sigma: float = DEFAULT_PHASE_NOISE  # [rad]
    sweep_start: float = 0.4 * math.pi  # [rad]
    sweep_stop: float = 1.4 * math.pi  # [rad]
    sweep_points: int = 11
    integration: float = 600.0  # [s] per phase point

    def config(self, phase: float = 0.0) -> FransonConfig:
        return FransonConfig(
            path_delay=self.path_delay,
            phase=phase,
            intrinsic_visibility=self.intrinsic_visibility,
            splitter_ratio=self.splitter_ratio,
            phase_noise_sigma=self.phase_noise_sigma,
        )


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    format: str = "csv"  # csv | kv

    def __post_init__(self):
        if self.format not in ("csv", "kv"):
            raise ConfigError(f"output.format must be 'csv' or 'kv', got {self.format!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunSettings
    resonator: ResonatorSpec = field(default_factory=algaas_ring)
    signal_chain: DetectionChain = field(default_factory=lambda: snspd_chain(13.6))
    idler_chain: DetectionChain = field(default_factory=lambda: snspd_chain(19.4))
    third_chain: DetectionChain = field(default_factory=lambda: snspd_chain(19.4))
    franson: FransonSettings = field(default_factory=FransonSettings)
    output: OutputSettings = field(default_factory=OutputSettings)


def default_config(seed: int = 1, duration: float = 600.0, **run_overrides) -> ExperimentConfig:
    """The AlGaAsOI device with its measurement chains and defaults."""
    return ExperimentConfig(run=RunSettings(duration=duration, seed=seed, **run_overrides))


# ---------------------------------------------------------------------------
# field tables: (key, unit scale to SI, attribute)

_RESONATOR_FIELDS = (
    ("radius_um", 1e-6, "radius"),
    ("q_loaded", 1.0, "q_loaded"),
    ("gamma_eff_per_w_m", 1.0, "gamma_eff"),
    ("group_index", 1.0, "group_index"),
    ("pump_wavelength_nm", 1e-9, "pump_wavelength"),
    ("extinction_depth", 1.0, "extinction_depth"),
)

_CHAIN_FIELDS = (
    ("path_loss_db", 1.0, "path_loss_db"),
    ("facet_loss_db", 1.0, "facet_loss_db"),
    ("detector_efficiency", 1.0, "detector_efficiency"),
    ("dark_rate_hz", 1.0, "dark_rate"),
    ("jitter_sigma_ps", 1e-12, "jitter_sigma"),
    ("dead_time_ns", 1e-9, "dead_time"),
    ("delay_ns", 1e-9, "delay"),
    ("pump_leak_hz_per_mw", 1e3, "pump_leak_rate_per_w"),
)

_FRANSON_FIELDS = (
    ("path_delay_ns", 1e-9, "path_delay"),
    ("intrinsic_visibility", 1.0, "intrinsic_visibility"),
    ("splitter_ratio", 1.0, "splitter_ratio"),
    ("phase_noise_rad", 1.0, "phase_noise_sigma"),
    ("sweep_start_rad", 1.0, "sweep_start"),
    ("sweep_stop_rad", 1.0, "sweep_stop"),
    ("integration_s", 1.0, "integration"),
)

_CHAIN_PREFIXES = (("signal", "signal_chain"), ("idler", "idler_chain"), ("third", "third_chain"))


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: not a number: {raw!r}") from exc
    if not math.isfinite(value):
        raise ConfigError(f"{section}.{key}: must be finite, got {raw!r}")
    return value


def _build_from_fields(section, values, fields, defaults):
    kwargs = {}
    for key, scale, attr in fields:
        if key in values:
            kwargs[attr] = _parse_float(section, key, values.pop(key)) * scale
    try:
        return replace(defaults, **kwargs) if kwargs else defaults
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def parse_config(text: str) -> ExperimentConfig:
    """Parse the key=value text format; strict about unknown keys."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    known_sections = {"resonator", "chains", "run", "franson", "output"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")

    sections = {name: dict(parser.items(name)) for name in parser.sections()}

    resonator = _build_from_fields(
        "resonator", sections.get("resonator", {}), _RESONATOR_FIELDS, algaas_ring()
    )
    if sections.get("resonator"):
        raise ConfigError(f"unknown key(s) in [resonator]: {sorted(sections['resonator'])}")

    chains = {}
    chain_values = sections.get("chains", {})
    for prefix, attr in _CHAIN_PREFIXES:
        defaults = snspd_chain(13.6) if prefix == "signal" else snspd_chain(19.4)
        kwargs = {}
        for key, scale, chain_attr in _CHAIN_FIELDS:
            full = f"{prefix}_{key}"
            if full in chain_values:
                kwargs[chain_attr] = _parse_float("chains", full, chain_values.pop(full)) * scale
        try:
            chains[attr] = replace(defaults, **kwargs) if kwargs else defaults
        except ValueError as exc:
            raise ConfigError(f"[chains] {prefix}: {exc}") from exc
    if chain_values:
        raise ConfigError(f"unknown key(s) in [chains]: {sorted(chain_values)}")

    run_values = sections.get("run", {})
    for required in ("duration_s", "seed"):
        if required not in run_values:
            raise ConfigError(f"missing required field run.{required}")
    try:
        seed = int(run_values.pop("seed"))
    except ValueError as exc:
        raise ConfigError(f"run.seed: not an integer") from exc
    duration = _parse_float("run", "duration_s", run_values.pop("duration_s"))
    run_kwargs = {"duration": duration, "seed": seed}
    if "powers_mw" in run_values:
        raw = run_values.pop("powers_mw")
        try:
            powers = tuple(float(tok) * 1e-3 for tok in raw.split(",") if tok.strip())
        except ValueError as exc:
            raise ConfigError(f"run.powers_mw: not a comma-separated number list: {raw!r}") from exc
        if not powers:
            raise ConfigError("run.powers_mw: need at least one power")
        run_kwargs["powers_w"] = powers
    for key, scale, attr in (
        ("bin_width_ps", 1e-12, "bin_width"),
        ("window_ns", 1e-9, "window"),
        ("max_delay_ns", 1e-9, "max_delay"),
        ("correlation_time_ns", 1e-9, "correlation_time"),
    ):
        if key in run_values:
            run_kwargs[attr] = _parse_float("run", key, run_values.pop(key)) * scale
    if run_values:
        raise ConfigError(f"unknown key(s) in [run]: {sorted(run_values)}")
    run = RunSettings(**run_kwargs)

    franson_values = sections.get("franson", {})
    fr_kwargs = {}
    for key, scale, attr in _FRANSON_FIELDS:
        if key in franson_values:
            fr_kwargs[attr] = _parse_float("franson", key, franson_values.pop(key)) * scale
    if "sweep_points" in franson_values:
        try:
            fr_kwargs["sweep_points"] = int(franson_values.pop("sweep_points"))
        except ValueError as exc:
            raise ConfigError("franson.sweep_points: not an integer") from exc
    if franson_values:
        raise ConfigError(f"unknown key(s) in [franson]: {sorted(franson_values)}")
    try:
        franson = FransonSettings(**fr_kwargs) if fr_kwargs else FransonSettings()
        franson.config()  # validate through the runtime type
    except ValueError as exc:
        raise ConfigError(f"[franson] {exc}") from exc

    out_values = sections.get("output", {})
    out_kwargs = {}
    if "directory" in out_values:
        out_kwargs["directory"] = out_values.pop("directory")
    if "format" in out_values:
        out_kwargs["format"] = out_values.pop("format")
    if out_values:
        raise ConfigError(f"unknown key(s) in [output]: {sorted(out_values)}")
    output = OutputSettings(**out_kwargs)

    return ExperimentConfig(
        run=run,
        resonator=resonator,
        signal_chain=chains["signal_chain"],
        idler_chain=chains["idler_chain"],
        third_chain=chains["third_chain"],
        franson=franson,
        output=output,
    )


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def format_config(cfg: ExperimentConfig) -> str:
    """Serialize to the canonical text form (full float precision)."""
    buf = io.StringIO()
    buf.write("[resonator]\n")
    for key, scale, attr in _RESONATOR_FIELDS:
        buf.write(f"{key} = {_fmt(getattr(cfg.resonator, attr) / scale)}\n")
    buf.write("\n[chains]\n")
    for prefix, attr in _CHAIN_PREFIXES:
        chain = getattr(cfg, attr)
        for key, scale, chain_attr in _CHAIN_FIELDS:
            buf.write(f"{prefix}_{key} = {_fmt(getattr(chain, chain_attr) / scale)}\n")
    buf.write("\n[run]\n")
    buf.write(f"duration_s = {_fmt(cfg.run.duration)}\n")
    buf.write(f"seed = {cfg.run.seed}\n")
    buf.write("powers_mw = " + ", ".join(_fmt(p / 1e-3) for p in cfg.run.powers_w) + "\n")
    buf.write(f"bin_width_ps = {_fmt(cfg.run.bin_width / 1e-12)}\n")
    buf.write(f"window_ns = {_fmt(cfg.run.window / 1e-9)}\n")
    buf.write(f"max_delay_ns = {_fmt(cfg.run.max_delay / 1e-9)}\n")
    if cfg.run.correlation_time is not None:
        buf.write(f"correlation_time_ns = {_fmt(cfg.run.correlation_time / 1e-9)}\n")
    buf.write("\n[franson]\n")
    for key, scale, attr in _FRANSON_FIELDS:
        buf.write(f"{key} = {_fmt(getattr(cfg.franson, attr) / scale)}\n")
    buf.write(f"sweep_points = {cfg.franson.sweep_points}\n")
    buf.write("\n[output]\n")
    buf.write(f"directory = {cfg.output.directory}\n")
    buf.write(f"format = {cfg.output.format}\n")
    return buf.getvalue()


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
