"""Shared helpers for the test suite."""

import math

import numpy as np
import pytest

from ringsim.eventsim import SimConfig, snspd_chain
from ringsim.resonator import algaas_ring


def power_for_pgr(pgr: float) -> float:
    """Pump power [W] that makes the default ring emit ``pgr`` pairs/s."""
    return 1e-3 * math.sqrt(pgr / 20e9)


def paper_chains(**overrides):
    """Signal/idler chains with the measured loss budgets."""
    return snspd_chain(13.6, **overrides), snspd_chain(19.4, **overrides)


def make_sim(pgr, duration, seed, dead_time=None, dark_rate=None):
    kw = {}
    if dead_time is not None:
        kw["dead_time"] = dead_time
    if dark_rate is not None:
        kw["dark_rate"] = dark_rate
    sig, idl = paper_chains(**kw)
    return SimConfig(
        spec=algaas_ring(),
        pump_power=power_for_pgr(pgr),
        duration=duration,
        signal_chain=sig,
        idler_chain=idl,
        rng_seed=seed,
    )


def laplace_capture(half_window_s: float, tau_s: float) -> float:
    """Fraction of double-sided exponential delays within +/- half_window."""
    return 1.0 - math.exp(-half_window_s / tau_s)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
