"""HTTP front end around the simulation/analysis core.

Request models mirror the configuration file sections (same unit-suffixed
field names); responses are the runner dictionaries.  Domain errors map to
status codes the thin CLI client translates into exit codes: 400 for
configuration problems, 409 when a run has insufficient statistics.
"""

from __future__ import annotations

from dataclasses import replace

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from ringsim import runner
from ringsim.config import (
    ConfigError,
    ExperimentConfig,
    FransonSettings,
    OutputSettings,
    RunSettings,
    default_config,
)
from ringsim.eventsim import DetectionChain
from ringsim.resonator import algaas_ring

_DEFAULTS = default_config()


class ResonatorModel(BaseModel):
    radius_um: float = _DEFAULTS.resonator.radius / 1e-6
    q_loaded: float = _DEFAULTS.resonator.q_loaded
    gamma_eff_per_w_m: float = _DEFAULTS.resonator.gamma_eff
    group_index: float = _DEFAULTS.resonator.group_index
    pump_wavelength_nm: float = _DEFAULTS.resonator.pump_wavelength / 1e-9
    extinction_depth: float = _DEFAULTS.resonator.extinction_depth


class ChainModel(BaseModel):
    path_loss_db: float = 0.0
    facet_loss_db: float = 5.0
    detector_efficiency: float = 1.0
    dark_rate_hz: float = 100.0
    jitter_sigma_ps: float = 17.0
    dead_time_ns: float = 50.0
    delay_ns: float = 0.0
    pump_leak_hz_per_mw: float = 0.0

    def to_chain(self) -> DetectionChain:
        return DetectionChain(
            path_loss_db=self.path_loss_db,
            facet_loss_db=self.facet_loss_db,
            detector_efficiency=self.detector_efficiency,
            dark_rate=self.dark_rate_hz,
            jitter_sigma=self.jitter_sigma_ps * 1e-12,
            dead_time=self.dead_time_ns * 1e-9,
            delay=self.delay_ns * 1e-9,
            pump_leak_rate_per_w=self.pump_leak_hz_per_mw * 1e3,
        )


class RunModel(BaseModel):
    duration_s: float = 600.0
    seed: int = 1
    powers_mw: list[float] = Field(default_factory=lambda: [p / 1e-3 for p in _DEFAULTS.run.powers_w])
    bin_width_ps: float = 100.0
    window_ns: float = 4.0
    max_delay_ns: float = 100.0
    correlation_time_ns: float | None = None


class FransonModel(BaseModel):
    path_delay_ns: float = _DEFAULTS.franson.path_delay / 1e-9
    intrinsic_visibility: float = 0.971
    splitter_ratio: float = 0.5
    phase_noise_rad: float = _DEFAULTS.franson.phase_noise_sigma
    sweep_start_rad: float = _DEFAULTS.franson.sweep_start
    sweep_stop_rad: float = _DEFAULTS.franson.sweep_stop
    sweep_points: int = 11
    integration_s: float = 600.0


class ConfigModel(BaseModel):
    resonator: ResonatorModel = Field(default_factory=ResonatorModel)
    signal_chain: ChainModel = Field(default_factory=lambda: ChainModel(path_loss_db=13.6))
    idler_chain: ChainModel = Field(default_factory=lambda: ChainModel(path_loss_db=19.4))
    third_chain: ChainModel = Field(default_factory=lambda: ChainModel(path_loss_db=19.4))
    run: RunModel = Field(default_factory=RunModel)
    franson: FransonModel = Field(default_factory=FransonModel)

    def to_config(self) -> ExperimentConfig:
        r = self.resonator
        try:
            spec = replace(
                algaas_ring(),
                radius=r.radius_um * 1e-6,
                q_loaded=r.q_loaded,
                gamma_eff=r.gamma_eff_per_w_m,
                group_index=r.group_index,
                pump_wavelength=r.pump_wavelength_nm * 1e-9,
                extinction_depth=r.extinction_depth,
            )
            run = RunSettings(
                duration=self.run.duration_s,
                seed=self.run.seed,
                powers_w=tuple(p * 1e-3 for p in self.run.powers_mw),
                bin_width=self.run.bin_width_ps * 1e-12,
                window=self.run.window_ns * 1e-9,
                max_delay=self.run.max_delay_ns * 1e-9,
                correlation_time=(
                    self.run.correlation_time_ns * 1e-9 if self.run.correlation_time_ns is not None else None
                ),
            )
            fr = self.franson
            franson = FransonSettings(
                path_delay=fr.path_delay_ns * 1e-9,
                intrinsic_visibility=fr.intrinsic_visibility,
                splitter_ratio=fr.splitter_ratio,
                phase_noise_sigma=fr.phase_noise_rad,
                sweep_start=fr.sweep_start_rad,
                sweep_stop=fr.sweep_stop_rad,
                sweep_points=fr.sweep_points,
                integration=fr.integration_s,
            )
            franson.config()  # validate through the runtime type
            return ExperimentConfig(
                run=run,
                resonator=spec,
                signal_chain=self.signal_chain.to_chain(),
                idler_chain=self.idler_chain.to_chain(),
                third_chain=self.third_chain.to_chain(),
                franson=franson,
                output=OutputSettings(),
            )
        except (ValueError, ConfigError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "ConfigModel":
        def chain_model(c: DetectionChain) -> ChainModel:
            return ChainModel(
                path_loss_db=c.path_loss_db,
                facet_loss_db=c.facet_loss_db,
                detector_efficiency=c.detector_efficiency,
                dark_rate_hz=c.dark_rate,
                jitter_sigma_ps=c.jitter_sigma / 1e-12,
                dead_time_ns=c.dead_time / 1e-9,
                delay_ns=c.delay / 1e-9,
                pump_leak_hz_per_mw=c.pump_leak_rate_per_w / 1e3,
            )

        return cls(
            resonator=ResonatorModel(
                radius_um=cfg.resonator.radius / 1e-6,
                q_loaded=cfg.resonator.q_loaded,
                gamma_eff_per_w_m=cfg.resonator.gamma_eff,
                group_index=cfg.resonator.group_index,
                pump_wavelength_nm=cfg.resonator.pump_wavelength / 1e-9,
                extinction_depth=cfg.resonator.extinction_depth,
            ),
            signal_chain=chain_model(cfg.signal_chain),
            idler_chain=chain_model(cfg.idler_chain),
            third_chain=chain_model(cfg.third_chain),
            run=RunModel(
                duration_s=cfg.run.duration,
                seed=cfg.run.seed,
                powers_mw=[p / 1e-3 for p in cfg.run.powers_w],
                bin_width_ps=cfg.run.bin_width / 1e-12,
                window_ns=cfg.run.window / 1e-9,
                max_delay_ns=cfg.run.max_delay / 1e-9,
                correlation_time_ns=(
                    cfg.run.correlation_time / 1e-9 if cfg.run.correlation_time is not None else None
                ),
            ),
            franson=FransonModel(
                path_delay_ns=cfg.franson.path_delay / 1e-9,
                intrinsic_visibility=cfg.franson.intrinsic_visibility,
                splitter_ratio=cfg.franson.splitter_ratio,
                phase_noise_rad=cfg.franson.phase_noise_sigma,
                sweep_start_rad=cfg.franson.sweep_start,
                sweep_stop_rad=cfg.franson.sweep_stop,
                sweep_points=cfg.franson.sweep_points,
                integration_s=cfg.franson.integration,
            ),
        )


class PgrRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)


class SimulateRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    include_timetags: bool = True


class FransonRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)


class G2hRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)


class ReplayRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    file_text: str


def _as_config(model: ConfigModel) -> ExperimentConfig:
    try:
        return model.to_config()
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="ringsim", version="0.1.0")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/pgr")
    def pgr(req: PgrRequest):
        return _run(runner.run_pgr, _as_config(req.config))

    @app.post("/simulate")
    def simulate(req: SimulateRequest):
        return _run(runner.run_simulate, _as_config(req.config), req.include_timetags)

    @app.post("/franson")
    def franson(req: FransonRequest):
        return _run(runner.run_franson, _as_config(req.config))

    @app.post("/g2h")
    def g2h(req: G2hRequest):
        return _run(runner.run_g2h, _as_config(req.config))

    @app.get("/compare")
    def compare(isolines: bool = True):
        return runner.run_compare(include_isolines=isolines)

    @app.post("/replay")
    def replay(req: ReplayRequest):
        return _run(runner.run_replay, _as_config(req.config), req.file_text)

    return app


def _run(fn, *args):
    try:
        return fn(*args)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


app = create_app()
