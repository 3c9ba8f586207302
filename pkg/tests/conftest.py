"""Shared builders for scheduler test scenarios.

Most tests need a small ScenarioSlice plus a technology; these helpers
keep the noise out of the test bodies. Randomized builders take an
explicit numpy Generator so every case is reproducible from its seed.
"""

from __future__ import annotations

import numpy as np
import pytest

from heliodac.dac import Technology
from heliodac.policy import PolicyState, ScenarioSlice
from heliodac.solar import StorageParams


def toy_tech(
    x_max: float = 1.0,
    beta_a1: float = 0.25,
    beta_a2: float = -0.25,
    beta_d2: float = 0.5,
    p_a: float = 0.05,
    p_d: float = 0.01,
    s: float = 10.0,
    heat: float = 0.2,
) -> Technology:
    """A fast-saturating sorbent with round numbers for hand checks."""
    return Technology(
        name="toy",
        S=s,
        P_a=p_a,
        P_d=p_d,
        beta_a1=beta_a1,
        beta_a2=beta_a2,
        beta_d1=0.0,
        beta_d2=beta_d2,
        cycle_hours=1.0,
        X_max=x_max,
        H=heat,
    )


def make_slice(
    prices,
    flux=None,
    pi: float = 100.0,
    carbon=None,
    energy_factor=None,
    capture_factor=None,
    rho_e: float = 0.0,
    pv_energy=None,
    battery_mwh: float = 0.0,
) -> ScenarioSlice:
    prices = np.asarray(prices, dtype=float)
    n = len(prices)

    def fill(x, default):
        if x is None:
            return np.full(n, default)
        return np.asarray(x, dtype=float)

    return ScenarioSlice(
        prices=prices,
        carbon_intensity=fill(carbon, 0.0),
        flux=fill(flux, 1.0),
        energy_factor=fill(energy_factor, 1.0),
        capture_factor=fill(capture_factor, 1.0),
        pi=pi,
        rho_e=rho_e,
        pv_energy=None if pv_energy is None else np.asarray(pv_energy, dtype=float),
        battery_mwh=battery_mwh,
    )


def random_instance(rng: np.random.Generator, steps: int = 12):
    """A random dispatch instance: two-regime prices, bursty flux.

    Returns (slice, tech, storage, state). The sorbent keeps the bundled
    solid-sorbent rate shape (uptake decaying in loading, release
    proportional to it, adsorption-heavy electric draw) but runs hot
    enough that a full cycle spans ~2 steps, preserving the cycle-to-
    horizon ratio a day-length window gives the bundled technologies.
    Storage starts charged so regeneration heat never binds.
    """
    x_max = float(rng.uniform(0.5, 2.0))
    tech = Technology(
        name="fastmof",
        S=float(rng.uniform(1.0, 3.0)) * x_max,
        P_a=float(rng.uniform(0.40, 0.55)) * x_max,
        P_d=float(rng.uniform(0.40, 0.55)) * x_max,
        beta_a1=float(rng.uniform(1.05, 1.40)),
        beta_a2=-float(rng.uniform(0.05, 0.30)),
        beta_d1=0.0,
        beta_d2=float(rng.uniform(1.05, 1.50)),
        cycle_hours=1.0,
        X_max=x_max,
        H=float(rng.uniform(0.10, 0.30)) * x_max,
    )
    n_cheap = int(rng.integers(max(1, steps // 2), steps))
    cheap_at = rng.choice(steps, size=n_cheap, replace=False)
    prices = rng.uniform(700.0, 900.0, size=steps)
    prices[cheap_at] = rng.uniform(5.0, 20.0, size=n_cheap)
    flux = rng.uniform(0.0, 3.0 * tech.H, size=steps)
    pi = float(rng.uniform(180.0, 260.0))
    storage = StorageParams(rated_mwh=float(rng.uniform(8.0, 20.0)), target_temp_c=400.0)
    sl = make_slice(prices, flux=flux, pi=pi)
    h0 = float(rng.uniform(0.5, 1.0)) * storage.rated_mwh
    # start from a state the automaton itself can hold between steps: with
    # single-step phases the loading is either empty or full at any boundary
    if rng.random() < 0.5:
        state = PolicyState(X=tech.X_max, h=h0, k=int(rng.integers(0, 2)))
    else:
        state = PolicyState(X=0.0, h=h0, k=0)
    return sl, tech, storage, state


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20230117)
