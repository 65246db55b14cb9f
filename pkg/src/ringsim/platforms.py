"""Published pair-source benchmarks across integrated photonic platforms.

The cells are stored verbatim as published (including "~" markers for
approximate values, "±" uncertainties and blanks for unreported numbers);
numeric accessors parse them for ratio computations and skip blanks.
PGR and brightness are normalized to 1 mW on-chip pump power; CAR,
visibility and heralded g2 refer to operation at a 1 MHz on-chip pair
rate.  All entries are microring resonators except LiNbO3 (a linear
periodically poled waveguide).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

from ringsim.resonator import DEFAULT_GAMMA_EFF


@dataclass(frozen=True)
class PlatformRecord:
    """One comparison row; empty cells are explicit absences."""

    platform: str
    process: str  # SFWM | SPDC
    q: str
    pgr_ghz: str
    brightness: str  # [pairs s^-1 GHz^-1]
    car: str
    visibility_pct: str
    g2h: str
    reference: str

    def value(self, column: str) -> float | None:
        """Numeric value of a cell (strips '~' and '±...'); None for blanks."""
        cell = getattr(self, column).strip()
        if not cell:
            return None
        return float(cell.lstrip("~").split("±")[0])


PLATFORM_TABLE = (
    PlatformRecord("AlGaAsOI", "SFWM", "1.2e6", "20", "2e11", "2697±260", "97.1±0.6", "0.004±0.01", "this work"),
    PlatformRecord("SOI", "SFWM", "~1e5", "0.149", "7.1e7", "532±35", "98.9±0.6", "0.0053±0.021", "Ma 2017"),
    PlatformRecord("InP", "SFWM", "4e4", "0.145", "3.1e7", "277", "78.4±2", "", "Kumar 2019"),
    PlatformRecord("Si3N4", "SFWM", "2e6", "0.004", "4.3e8", "~10", "90±7", "", "Ramelow 2015"),
    PlatformRecord("LiNbO3", "SPDC", "", "0.023", "3e5", "668±1.7", "", "", "Zhao 2020"),
    PlatformRecord("AlN", "SPDC", "1.1e5", "0.006", "5.3e6", "", "", "0.088±0.004", "Guo 2017"),
)

_COLUMNS = ("platform", "process", "q", "pgr_ghz", "brightness", "car", "visibility_pct", "g2h", "reference")

# Default AlGaAsOI ring geometry for the isoline normalization.
_REFERENCE_Q = 1.24e6
_REFERENCE_RADIUS = 13.91e-6


def format_table() -> str:
    """The comparison dataset as CSV, blanks preserved."""
    buf = io.StringIO()
    buf.write(",".join(_COLUMNS) + "\n")
    for rec in PLATFORM_TABLE:
        buf.write(",".join(getattr(rec, col) for col in _COLUMNS) + "\n")
    return buf.getvalue()


def brightness_ratios() -> dict[str, float]:
    """Brightness of the AlGaAsOI source relative to every other platform.

    Platforms with a blank brightness cell are excluded.
    """
    ref = PLATFORM_TABLE[0].value("brightness")
    out = {}
    for rec in PLATFORM_TABLE[1:]:
        b = rec.value("brightness")
        if b is not None and b > 0:
            out[rec.platform] = ref / b
    return out


def isoline_csv(levels=(1.0, 1e-2, 1e-4), points: int = 25) -> str:
    """Brightness-vs-nonlinearity guide curves at constant Q^3 R^-2.

    Each curve is brightness = B_ref * (gamma / gamma_ref)^2 * level, i.e.
    a slope-two line in log-log space through the calibrated AlGaAsOI
    point, scaled down by the stated Q^3 R^-2 reduction.  Column headers
    carry the absolute Q^3 R^-2 value [m^-2] of each curve.
    """
    b_ref = PLATFORM_TABLE[0].value("brightness")
    q3r2_ref = _REFERENCE_Q**3 / _REFERENCE_RADIUS**2
    headers = ["gamma_w_per_m"] + [f"brightness_q3r2_{q3r2_ref * lv:.3g}" for lv in levels]
    buf = io.StringIO()
    buf.write(",".join(headers) + "\n")
    lo, hi = math.log10(0.01), math.log10(1000.0)
    for i in range(points):
        gamma = 10.0 ** (lo + (hi - lo) * i / (points - 1))
        row = [f"{gamma:.6g}"]
        for lv in levels:
            row.append(f"{b_ref * (gamma / DEFAULT_GAMMA_EFF) ** 2 * lv:.6g}")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
