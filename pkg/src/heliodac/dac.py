"""DAC sorbent technologies: rate laws, saturation dynamics, ambient corrections.

Rates are expressed as fractions of the per-cycle capacity X_max per master
step, so a technology scales linearly to any plant size. Electricity draw,
switching cost and regeneration heat all scale with X_max as well.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

STEP_SECONDS = 300
STEP_HOURS = STEP_SECONDS / 3600.0

IDLE, ADSORB, DESORB = 0, 1, 2
PHASE_NAMES = {IDLE: "idle", ADSORB: "adsorb", DESORB: "desorb"}
PHASE_CODES = {v: k for k, v in PHASE_NAMES.items()}

# regeneration heat demand per ton of capacity released, MWh thermal
THERMAL_MWH_PER_TON_DEFAULT = 1.8
THERMAL_MWH_PER_TON_RANGE = (1.4, 3.2)

# rates below this fraction of the nominal adsorption rate count as stalled
RATE_EPSILON_FRACTION = 0.01

_BASELINE_T = 20.0
_BASELINE_RH = 0.5


class InfeasibleStateError(RuntimeError):
    """A state update left the physically allowed saturation range."""


@dataclass(frozen=True)
class Technology:
    """One sorbent at a fixed plant scale.

    P_a/P_d are MWh of electricity per active step, S is USD per cycle
    switch and H is MWh of heat drawn from storage per desorption step,
    all at this instance's X_max.
    """

    name: str
    S: float
    P_a: float
    P_d: float
    beta_a1: float
    beta_a2: float
    beta_d1: float
    beta_d2: float
    cycle_hours: float
    X_max: float
    H: float

    def __post_init__(self) -> None:
        if self.X_max <= 0:
            raise ValueError("X_max must be positive")
        if min(self.S, self.P_a, self.P_d, self.H) < 0:
            raise ValueError("costs, power draws and heat demand must be non-negative")
        for x in (0.0, self.X_max):
            if adsorption_cap(x, self, 1.0) < 0 or desorption_cap(x, self) < 0:
                raise ValueError("rate caps must be non-negative across [0, X_max]")

    @property
    def rate_epsilon(self) -> float:
        return RATE_EPSILON_FRACTION * self.beta_a1 * self.X_max


@dataclass(frozen=True)
class DacState:
    X: float = 0.0
    phase: int = IDLE
    k: int = 0


@dataclass(frozen=True)
class AmbientFactors:
    energy_factor: float
    capture_factor: float


def capacity_per_cycle(annual_capacity: float, cycle_hours: float) -> float:
    """Per-cycle capture capacity X_max for a plant's annual nameplate."""
    if annual_capacity <= 0 or cycle_hours <= 0:
        raise ValueError("annual capacity and cycle length must be positive")
    return annual_capacity / (8760.0 / cycle_hours)


def adsorption_cap(X: float, tech: Technology, capture_factor: float = 1.0) -> float:
    """Maximum CO2 uptake this step, t, at saturation X."""
    frac = X / tech.X_max
    return max(0.0, capture_factor * (tech.beta_a1 + tech.beta_a2 * frac) * tech.X_max)


def desorption_cap(X: float, tech: Technology) -> float:
    """Maximum CO2 release this step, t. Ambient conditions do not apply;
    desorption runs inside the controlled regeneration loop."""
    frac = X / tech.X_max
    return max(0.0, (tech.beta_d1 + tech.beta_d2 * frac) * tech.X_max)


def step_state(state: DacState, phase: int, a: float, d: float, tech: Technology) -> tuple[DacState, int]:
    """Advance saturation and the cycle sign flag; returns (state, z).

    z = 1 marks a cycle switch: the flag k rises when adsorption follows a
    desorbed (or initial) state, stays put on idle, and falls on desorption.
    """
    if phase not in PHASE_NAMES:
        raise ValueError(f"unknown phase code {phase}")
    if phase != ADSORB and a:
        raise ValueError("adsorption rate given outside adsorb phase")
    if phase != DESORB and d:
        raise ValueError("desorption rate given outside desorb phase")
    x_new = state.X + a - d
    tol = 1e-9 * max(1.0, tech.X_max)
    if x_new < -tol or x_new > tech.X_max + tol:
        raise InfeasibleStateError(
            f"saturation {x_new:.6g} outside [0, {tech.X_max:.6g}]"
        )
    x_new = min(max(x_new, 0.0), tech.X_max)
    if phase == ADSORB:
        k_new = 1
    elif phase == DESORB:
        k_new = 0
    else:
        k_new = state.k
    z = 1 if (k_new == 1 and state.k == 0) else 0
    return DacState(X=x_new, phase=phase, k=k_new), z


# ---------------------------------------------------------------------------
# ambient correction factors


def _raw_energy_solid(temp_c, rh):
    wet = np.asarray(rh, dtype=float) - 0.4
    t = np.asarray(temp_c, dtype=float)
    return (1.9 + 0.01 * (t - 20.0)) * wet**2 * np.exp(wet) + (
        1.5 + 0.003 * (t - 20.0) ** 2
    )


def _raw_capture_solid(temp_c, rh):
    wet = np.asarray(rh, dtype=float) - 0.4
    t = np.asarray(temp_c, dtype=float)
    return 65.0 - 0.01 * t**2 - (t + 20.0) * wet**2


_ENERGY_BASE = float(_raw_energy_solid(_BASELINE_T, _BASELINE_RH))
_CAPTURE_BASE = float(_raw_capture_solid(_BASELINE_T, _BASELINE_RH))


def ambient_factors_solid(temp_c, rh):
    """Energy and capture multipliers for the solid sorbent, 1.0 at (20 C, 0.5).

    Scalars return an AmbientFactors pair; arrays return two arrays.
    """
    rh_arr = np.asarray(rh, dtype=float)
    if np.any(rh_arr < 0) or np.any(rh_arr > 1):
        raise ValueError("relative humidity must lie in [0, 1]")
    energy = np.maximum(0.0, _raw_energy_solid(temp_c, rh) / _ENERGY_BASE)
    capture = np.maximum(0.0, _raw_capture_solid(temp_c, rh) / _CAPTURE_BASE)
    if np.isscalar(temp_c) and np.isscalar(rh):
        return AmbientFactors(float(energy), float(capture))
    return energy, capture


def ambient_capture_koh(temp_c, rh):
    """Capture multiplier for the aqueous KOH system, 1.0 at (20 C, 0.5)."""
    rh_arr = np.asarray(rh, dtype=float)
    if np.any(rh_arr < 0) or np.any(rh_arr > 1):
        raise ValueError("relative humidity must lie in [0, 1]")
    raw = 74.0 + 8.0 * (rh_arr - 0.5) + (np.asarray(temp_c, dtype=float) - 20.0)
    out = np.maximum(0.0, raw / 74.0)
    if np.isscalar(temp_c) and np.isscalar(rh):
        return float(out)
    return out


# ---------------------------------------------------------------------------
# bundled technology table


def _default_table_path() -> Path:
    return Path(str(resources.files("heliodac").joinpath("data/technologies.json")))


def read_technology_table(path: str | Path | None = None) -> dict[str, dict]:
    """Raw bundled parameter table, exactly as shipped."""
    with open(path or _default_table_path()) as fh:
        doc = json.load(fh)
    return doc["technologies"]


def desorption_steps(tech: Technology) -> int:
    """Steps one full regeneration takes before the release rate stalls."""
    x = tech.X_max
    eps = tech.rate_epsilon
    steps = 0
    while steps < 10**6:
        cap = desorption_cap(x, tech)
        if cap <= eps or x <= 0:
            break
        x -= min(cap, x)
        steps += 1
    if steps == 0:
        raise ValueError(f"{tech.name}: desorption never exceeds the stall rate")
    return steps


def load_technology(
    name: str,
    x_max: float = 1.0,
    thermal_mwh_per_ton: float = THERMAL_MWH_PER_TON_DEFAULT,
    path: str | Path | None = None,
) -> Technology:
    """Build a Technology at the requested per-cycle capacity.

    Switching cost, electric draw and regeneration heat scale linearly
    with capacity; rate coefficients are scale-free fractions.
    """
    lo, hi = THERMAL_MWH_PER_TON_RANGE
    if not lo <= thermal_mwh_per_ton <= hi:
        raise ValueError(
            f"thermal demand {thermal_mwh_per_ton} MWh/t outside supported range {lo}-{hi}"
        )
    table = read_technology_table(path)
    if name not in table:
        raise KeyError(f"unknown technology {name!r}; have {sorted(table)}")
    row = table[name]
    base = Technology(
        name=name,
        S=row["cycle_switch_cost_usd"] * x_max,
        P_a=row["adsorption_power_mw"] * x_max * STEP_HOURS,
        P_d=row["desorption_power_mw"] * x_max * STEP_HOURS,
        beta_a1=row["beta_a1"],
        beta_a2=row["beta_a2"],
        beta_d1=row["beta_d1"],
        beta_d2=row["beta_d2"],
        cycle_hours=row["cycle_hours"],
        X_max=x_max,
        H=0.0,
    )
    n_desorb = desorption_steps(base)
    return replace(base, H=thermal_mwh_per_ton * x_max / n_desorb)


def load_technologies(
    x_max: float = 1.0,
    thermal_mwh_per_ton: float = THERMAL_MWH_PER_TON_DEFAULT,
    path: str | Path | None = None,
) -> dict[str, Technology]:
    return {
        name: load_technology(name, x_max, thermal_mwh_per_ton, path)
        for name in read_technology_table(path)
    }


def adsorption_steps(tech: Technology) -> int:
    """Steps to load from empty until the uptake rate stalls or X_max is hit."""
    x = 0.0
    eps = tech.rate_epsilon
    steps = 0
    while steps < 10**6:
        cap = adsorption_cap(x, tech, 1.0)
        if cap <= eps or x >= tech.X_max * (1 - 1e-12):
            break
        x += min(cap, tech.X_max - x)
        steps += 1
    return max(steps, 1)
