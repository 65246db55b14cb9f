"""Closed-form microring pair-source physics.

A Kerr microring pumped on resonance emits time-energy correlated photon
pairs at the comb lines adjacent to the pump.  The on-chip pair generation
rate follows

    PGR = (gamma_eff * 2*pi*R)^2 * (Q * v_g / (pi * omega_p * R))^3
          * (v_g / (4*pi*R)) * P_p^2

with ring radius R, loaded quality factor Q, pump angular frequency
omega_p, group velocity v_g = c / n_g and on-chip pump power P_p.  The
factors are kept grouped exactly as written so the scaling laws
(PGR ~ Q^3, ~R^-2, ~P^2) hold bit-exactly under doubling of a parameter.

The module also provides the linewidth / free-spectral-range arithmetic
and a symmetric Lorentzian transmission-dip model used to synthesize
calibration traces for the fitting stage.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np

C_VACUUM = 299792458.0  # speed of light [m/s]

# Nonlinear coefficient [W^-1 m^-1] calibrated by inverting the rate law so
# that the default AlGaAsOI ring (R = 13.91 um, Q = 1.24e6,
# lambda_p = 1557.59 nm, n_g = 3.7) reproduces the measured
# 2.0e10 pairs s^-1 mW^-2 slope exactly.  Neither gamma_eff nor v_g is a
# directly measured quantity for this device; treat both as model inputs.
DEFAULT_GAMMA_EFF = 28.670987182187531

# Group index chosen so the free spectral range matches the observed
# ~7.5 nm comb spacing of the default ring near 1557 nm.
DEFAULT_GROUP_INDEX = 3.7

DEFAULT_PUMP_WAVELENGTH = 1557.59e-9  # [m]


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class ResonatorSpec:
    """Physical description of the ring and its pump.

    Units: radius and pump_wavelength in meters, gamma_eff in W^-1 m^-1.
    extinction_depth is the fractional on-resonance transmission dip used
    by the Lorentzian trace model.
    """

    radius: float
    q_loaded: float
    gamma_eff: float = DEFAULT_GAMMA_EFF
    group_index: float = DEFAULT_GROUP_INDEX
    pump_wavelength: float = DEFAULT_PUMP_WAVELENGTH
    extinction_depth: float = 0.9

    def __post_init__(self):
        if _require_finite("radius", self.radius) <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if _require_finite("q_loaded", self.q_loaded) <= 1:
            raise ValueError(f"q_loaded must exceed 1, got {self.q_loaded}")
        if _require_finite("gamma_eff", self.gamma_eff) < 0:
            raise ValueError(f"gamma_eff must be non-negative, got {self.gamma_eff}")
        if _require_finite("group_index", self.group_index) < 1:
            raise ValueError(f"group_index must be >= 1, got {self.group_index}")
        if _require_finite("pump_wavelength", self.pump_wavelength) <= 0:
            raise ValueError(f"pump_wavelength must be positive, got {self.pump_wavelength}")
        if not 0.0 <= _require_finite("extinction_depth", self.extinction_depth) <= 1.0:
            raise ValueError(f"extinction_depth must lie in [0, 1], got {self.extinction_depth}")

    @property
    def pump_omega(self) -> float:
        """Pump angular frequency 2*pi*c/lambda_p [rad/s]."""
        return 2.0 * math.pi * C_VACUUM / self.pump_wavelength

    @property
    def pump_frequency(self) -> float:
        """Pump optical frequency c/lambda_p [Hz]."""
        return C_VACUUM / self.pump_wavelength

    @property
    def group_velocity(self) -> float:
        """Group velocity c/n_g [m/s]."""
        return C_VACUUM / self.group_index

    @property
    def cavity_lifetime(self) -> float:
        """Photon storage time Q/omega_p [s]; sets the pair correlation width."""
        return self.q_loaded / self.pump_omega


def algaas_ring(**overrides) -> ResonatorSpec:
    """The default AlGaAsOI device used throughout the test protocols."""
    spec = ResonatorSpec(radius=13.91e-6, q_loaded=1.24e6)
    return replace(spec, **overrides) if overrides else spec


def pgr_from_pump(spec: ResonatorSpec, pump_power: float) -> float:
    """On-chip pair generation rate [pairs/s] at the given pump power [W].

    Strictly quadratic in pump power; cubic in Q; scales as R^-2.
    """
    pump_power = _require_finite("pump_power", pump_power)
    if pump_power < 0:
        raise ValueError(f"pump_power must be non-negative, got {pump_power}")
    v_g = spec.group_velocity
    ring_term = spec.gamma_eff * (2.0 * math.pi * spec.radius)
    cavity_term = (spec.q_loaded * v_g) / (math.pi * spec.pump_omega * spec.radius)
    rate_term = v_g / (4.0 * math.pi * spec.radius)
    return (ring_term * ring_term) * (cavity_term * cavity_term * cavity_term) * rate_term * (pump_power * pump_power)


def calibrate_gamma(spec: ResonatorSpec, target_pgr: float, at_power: float) -> float:
    """Invert the rate law: gamma_eff that yields ``target_pgr`` at ``at_power``.

    Because PGR is proportional to gamma_eff^2 the inversion is exact up to
    a square root; the round trip through :func:`pgr_from_pump` is good to
    better than 1e-12 relative.
    """
    if not (_require_finite("target_pgr", target_pgr) > 0):
        raise ValueError(f"target_pgr must be positive, got {target_pgr}")
    if not (_require_finite("at_power", at_power) > 0):
        raise ValueError(f"at_power must be positive, got {at_power}")
    unit_gamma = replace(spec, gamma_eff=1.0)
    base = pgr_from_pump(unit_gamma, at_power)
    return math.sqrt(target_pgr / base)


@dataclass(frozen=True)
class Linewidth:
    fwhm_wavelength: float  # [m]
    fwhm_frequency: float  # [Hz]


def linewidth(spec: ResonatorSpec) -> Linewidth:
    """Resonance FWHM in both wavelength and frequency representations.

    FWHM_lambda = lambda_p / Q and FWHM_nu = nu_p / Q; the two are related
    by the usual c/lambda^2 dispersion identity.
    """
    return Linewidth(
        fwhm_wavelength=spec.pump_wavelength / spec.q_loaded,
        fwhm_frequency=spec.pump_frequency / spec.q_loaded,
    )


def free_spectral_range(spec: ResonatorSpec) -> float:
    """Comb-line spacing lambda^2 / (n_g * 2*pi*R) [m]."""
    lam = spec.pump_wavelength
    return lam * lam / (spec.group_index * 2.0 * math.pi * spec.radius)


def brightness(pgr_at_1mw: float, fwhm_frequency: float) -> float:
    """Pair flux normalized to the resonance bandwidth [pairs s^-1 GHz^-1]."""
    if not (_require_finite("pgr_at_1mw", pgr_at_1mw) > 0):
        raise ValueError(f"pgr_at_1mw must be positive, got {pgr_at_1mw}")
    if not (_require_finite("fwhm_frequency", fwhm_frequency) > 0):
        raise ValueError(f"fwhm_frequency must be positive, got {fwhm_frequency}")
    return pgr_at_1mw / (fwhm_frequency / 1e9)


def lorentzian_transmission(spec: ResonatorSpec, center, query):
    """Transmittance of a symmetric Lorentzian dip of depth ``extinction_depth``.

    T(lambda) = 1 - d / (1 + (2 (lambda - lambda_0) / FWHM)^2) with
    FWHM = lambda_0 / Q.  Accepts scalar or array ``query``.
    """
    center = np.asarray(center, dtype=float)
    query = np.asarray(query, dtype=float)
    fwhm = center / spec.q_loaded
    u = 2.0 * (query - center) / fwhm
    t = 1.0 - spec.extinction_depth / (1.0 + u * u)
    return float(t) if t.ndim == 0 else t


@dataclass(frozen=True)
class TransmissionTrace:
    """Sampled transmission spectrum: strictly increasing wavelengths [m]."""

    wavelengths: np.ndarray
    transmittance: np.ndarray

    def __post_init__(self):
        wl = np.asarray(self.wavelengths, dtype=float)
        tr = np.asarray(self.transmittance, dtype=float)
        if wl.ndim != 1 or wl.shape != tr.shape:
            raise ValueError("wavelengths and transmittance must be 1-d arrays of equal length")
        if wl.size >= 2 and not np.all(np.diff(wl) > 0):
            raise ValueError("wavelengths must be strictly increasing")
        if tr.size and (tr.min() < 0.0 or tr.max() > 1.0):
            raise ValueError("transmittance values must lie in [0, 1]")
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "transmittance", tr)

    def to_csv(self) -> str:
        """Two-column text, wavelengths in nanometers with >= 6 significant digits."""
        buf = io.StringIO()
        buf.write("wavelength_nm,transmittance\n")
        for wl, tr in zip(self.wavelengths, self.transmittance):
            buf.write(f"{wl * 1e9:.10g},{tr:.10g}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TransmissionTrace":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "wavelength_nm,transmittance":
            raise ValueError("expected header 'wavelength_nm,transmittance'")
        wl, tr = [], []
        for ln in lines[1:]:
            a, b = ln.split(",")
            wl.append(float(a) * 1e-9)
            tr.append(float(b))
        return cls(np.array(wl), np.array(tr))


def synthesize_trace(
    spec: ResonatorSpec,
    centers,
    span: float,
    step: float,
    noise_sigma: float = 0.0,
    rng_seed: int = 0,
) -> TransmissionTrace:
    """Synthetic transmission sweep across one or more resonances.

    The wavelength grid runs from ``min(centers) - span/2`` to
    ``max(centers) + span/2`` in steps of ``step``.  Multiplicative Gaussian
    noise of relative sigma ``noise_sigma`` is applied and the result is
    clipped back into [0, 1].  Deterministic for a fixed ``rng_seed``.
    """
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    if centers.size == 0:
        raise ValueError("centers must contain at least one resonance wavelength")
    if not (step > 0):
        raise ValueError(f"step must be positive, got {step}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be non-negative, got {noise_sigma}")
    lo = centers.min() - span / 2.0
    hi = centers.max() + span / 2.0
    n = int(math.floor((hi - lo) / step)) + 1
    wl = lo + step * np.arange(n)
    trans = np.ones_like(wl)
    for c in centers:
        trans *= lorentzian_transmission(spec, c, wl)
    if noise_sigma > 0:
        rng = np.random.default_rng(rng_seed)
        trans = trans * (1.0 + noise_sigma * rng.standard_normal(wl.size))
        trans = np.clip(trans, 0.0, 1.0)
    return TransmissionTrace(wl, trans)
