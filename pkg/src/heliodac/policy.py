"""Shared operating-policy machinery for both schedulers.

A plant run is a sequence of phase decisions (idle / adsorb / desorb) with
rates saturated at their caps. This module owns the scenario container, the
plant state, the step dynamics used by the threshold scheduler, and the
Schedule record both schedulers emit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dac import ADSORB, DESORB, IDLE, PHASE_NAMES, Technology
from .solar import StorageParams, effective_capacity

_EDGE = 1.0 - 1e-12   # saturation treated as full beyond this fraction
_TINY = 1e-12


@dataclass
class ScenarioSlice:
    """Exogenous inputs for a run window, all on the master step.

    prices are the raw electricity tape; the carbon-adjusted series used by
    the objective is `effective_prices`. Stand-alone plants set pv_energy
    (MWh available per step) and a battery instead of a price tape.
    """

    prices: np.ndarray
    carbon_intensity: np.ndarray
    flux: np.ndarray
    energy_factor: np.ndarray
    capture_factor: np.ndarray
    pi: float
    rho_e: float = 0.0
    pv_energy: np.ndarray | None = None
    battery_mwh: float = 0.0
    battery_roundtrip: float = 0.88

    def __post_init__(self) -> None:
        self.prices = np.ascontiguousarray(self.prices, dtype=float)
        self.carbon_intensity = np.ascontiguousarray(self.carbon_intensity, dtype=float)
        self.flux = np.ascontiguousarray(self.flux, dtype=float)
        self.energy_factor = np.ascontiguousarray(self.energy_factor, dtype=float)
        self.capture_factor = np.ascontiguousarray(self.capture_factor, dtype=float)
        n = len(self.prices)
        series = [self.carbon_intensity, self.flux, self.energy_factor, self.capture_factor]
        if self.pv_energy is not None:
            self.pv_energy = np.ascontiguousarray(self.pv_energy, dtype=float)
            series.append(self.pv_energy)
        if any(len(s) != n for s in series):
            raise ValueError("scenario series have mismatched lengths")
        if self.pi < 0:
            raise ValueError("carbon incentive must be non-negative")
        if not 0 < self.battery_roundtrip <= 1:
            raise ValueError("battery round-trip efficiency must lie in (0, 1]")

    def __len__(self) -> int:
        return len(self.prices)

    @property
    def effective_prices(self) -> np.ndarray:
        return adjust_price_carbon(self.prices, self.carbon_intensity, self.rho_e)

    def window(self, start: int, stop: int) -> "ScenarioSlice":
        return replace(
            self,
            prices=self.prices[start:stop],
            carbon_intensity=self.carbon_intensity[start:stop],
            flux=self.flux[start:stop],
            energy_factor=self.energy_factor[start:stop],
            capture_factor=self.capture_factor[start:stop],
            pv_energy=None if self.pv_energy is None else self.pv_energy[start:stop],
        )


def adjust_price_carbon(base_price, e_t, rho_e: float):
    """Fold a carbon price into the electricity tape: lambda = base + rho_e * e."""
    out = np.asarray(base_price, dtype=float) + rho_e * np.asarray(e_t, dtype=float)
    return float(out) if np.isscalar(base_price) else out


@dataclass(frozen=True)
class PolicyState:
    """Carry-over plant state between windows."""

    X: float = 0.0
    h: float = 0.0
    k: int = 0
    battery: float = 0.0


@dataclass
class Schedule:
    """Per-step operating log plus run totals."""

    phase: np.ndarray
    a: np.ndarray
    d: np.ndarray
    X: np.ndarray
    h: np.ndarray
    z: np.ndarray
    profit: float = 0.0
    captured: float = 0.0
    desorbed: float = 0.0
    energy_mwh: float = 0.0
    cycles: int = 0
    elec_cost: float = 0.0
    emitted: float = 0.0
    thermal_used: float = 0.0
    curtailed: float = 0.0
    active_steps: int = 0

    def __len__(self) -> int:
        return len(self.phase)

    @property
    def capacity_factor(self) -> float:
        return self.active_steps / len(self.phase) if len(self.phase) else 0.0

    def phase_names(self) -> list[str]:
        return [PHASE_NAMES[int(p)] for p in self.phase]


@dataclass
class SimOutcome:
    """Raw accumulator output of one policy simulation."""

    profit: np.ndarray
    captured: np.ndarray
    desorbed: np.ndarray
    energy_mwh: np.ndarray
    elec_cost: np.ndarray
    emitted: np.ndarray
    thermal_used: np.ndarray
    curtailed: np.ndarray
    active_steps: np.ndarray
    cycles: np.ndarray
    X: np.ndarray
    h: np.ndarray
    k: np.ndarray
    battery: np.ndarray
    log: Schedule | None = None


def simulate_thresholds(
    sl: ScenarioSlice,
    tech: Technology,
    storage: StorageParams,
    thresholds,
    state: PolicyState,
    record: bool = False,
) -> SimOutcome:
    """Run the activation policy for a vector of price thresholds at once.

    One pass over the window advances every candidate threshold in lockstep,
    which is what makes the chunked search affordable. With record=True (one
    threshold only) the per-step log is kept.
    """
    thr = np.atleast_1d(np.asarray(thresholds, dtype=float))
    K = len(thr)
    if record and K != 1:
        raise ValueError("per-step recording requires a single threshold")
    T = len(sl)

    lam = sl.effective_prices.tolist()
    e_t = sl.carbon_intensity.tolist()
    cfac = sl.capture_factor.tolist()
    efac = sl.energy_factor.tolist()
    flux = sl.flux.tolist()
    pv = sl.pv_energy.tolist() if sl.pv_energy is not None else None

    xm = tech.X_max
    ba1, ba2 = tech.beta_a1, tech.beta_a2
    bd1, bd2 = tech.beta_d1, tech.beta_d2
    eps = tech.rate_epsilon
    pa, pd, s_cost, heat = tech.P_a, tech.P_d, tech.S, tech.H
    pi = sl.pi
    h_eff = effective_capacity(storage)
    ret = storage.retention_per_step
    heat_need = heat * (1.0 - 1e-9)
    x_hi = xm * _EDGE
    x_lo = xm * _TINY
    leg_eff = math.sqrt(sl.battery_roundtrip)
    b_cap = sl.battery_mwh

    X = np.full(K, float(state.X))
    h = np.full(K, float(state.h))
    k_on = np.full(K, bool(state.k))
    batt = np.full(K, float(state.battery))

    profit = np.zeros(K)
    captured = np.zeros(K)
    desorbed = np.zeros(K)
    energy = np.zeros(K)
    cost = np.zeros(K)
    emitted = np.zeros(K)
    thermal = np.zeros(K)
    curtailed = np.zeros(K)
    active = np.zeros(K)
    cycles = np.zeros(K)

    if record:
        log_phase = np.zeros(T, dtype=np.int8)
        log_a = np.zeros(T)
        log_d = np.zeros(T)
        log_x = np.zeros(T)
        log_h = np.zeros(T)
        log_z = np.zeros(T, dtype=np.int8)

    for t in range(T):
        lam_t = lam[t]
        s_t = flux[t]
        cf_t = cfac[t]
        c_t = efac[t]

        on = thr >= lam_t
        frac = X / xm
        acap = np.maximum(cf_t * (ba1 + ba2 * frac) * xm, 0.0)
        dcap = np.maximum((bd1 + bd2 * frac) * xm, 0.0)
        saturated = (acap <= eps) | (X >= x_hi)
        drained = (dcap <= eps) | (X <= x_lo)
        unloading = np.where(k_on, saturated, ~drained)
        do_d = on & unloading
        do_a = on & ~unloading & ~saturated
        if heat > 0.0:
            # no point loading sorbent that cannot be regenerated
            can_heat = (ret * h + s_t) >= heat_need
            do_d &= can_heat
            do_a &= can_heat

        if pv is not None:
            avail = pv[t] + batt * leg_eff
            do_a &= avail >= c_t * pa
            do_d &= avail >= c_t * pd

        a = np.where(do_a, np.minimum(acap, xm - X), 0.0)
        d = np.where(do_d, np.minimum(dcap, X), 0.0)
        z = do_a & ~k_on
        X = X + a - d
        k_on = np.where(do_a, True, np.where(do_d, False, k_on))

        e_step = c_t * (pa * do_a + pd * do_d)
        step_cost = lam_t * e_step
        profit += pi * d - step_cost - s_cost * z
        captured += a
        desorbed += d
        energy += e_step
        cost += step_cost
        emitted += e_t[t] * e_step
        cycles += z
        active += do_a | do_d

        if pv is not None:
            from_pv = np.minimum(e_step, pv[t])
            batt = batt - (e_step - from_pv) / leg_eff
            batt = np.minimum(batt + (pv[t] - from_pv) * leg_eff, b_cap)

        h_pre = ret * h + s_t - heat * do_d
        h = np.minimum(h_pre, h_eff)
        curtailed += h_pre - h
        thermal += heat * do_d

        if record:
            log_phase[t] = ADSORB if do_a[0] else (DESORB if do_d[0] else IDLE)
            log_a[t] = a[0]
            log_d[t] = d[0]
            log_x[t] = X[0]
            log_h[t] = h[0]
            log_z[t] = 1 if z[0] else 0

    log = None
    if record:
        log = Schedule(
            phase=log_phase, a=log_a, d=log_d, X=log_x, h=log_h, z=log_z,
            profit=float(profit[0]), captured=float(captured[0]),
            desorbed=float(desorbed[0]), energy_mwh=float(energy[0]),
            cycles=int(round(float(cycles[0]))), elec_cost=float(cost[0]),
            emitted=float(emitted[0]), thermal_used=float(thermal[0]),
            curtailed=float(curtailed[0]), active_steps=int(round(float(active[0]))),
        )
    return SimOutcome(
        profit=profit, captured=captured, desorbed=desorbed, energy_mwh=energy,
        elec_cost=cost, emitted=emitted, thermal_used=thermal, curtailed=curtailed,
        active_steps=active, cycles=cycles, X=X, h=h,
        k=k_on.astype(int), battery=batt, log=log,
    )


def empty_schedule(steps: int = 0) -> Schedule:
    return Schedule(
        phase=np.zeros(steps, dtype=np.int8), a=np.zeros(steps), d=np.zeros(steps),
        X=np.zeros(steps), h=np.zeros(steps), z=np.zeros(steps, dtype=np.int8),
    )


def concat_schedules(parts: list[Schedule]) -> Schedule:
    """Stitch committed chunk logs into one run; totals add exactly."""
    if not parts:
        return empty_schedule()
    out = Schedule(
        phase=np.concatenate([p.phase for p in parts]),
        a=np.concatenate([p.a for p in parts]),
        d=np.concatenate([p.d for p in parts]),
        X=np.concatenate([p.X for p in parts]),
        h=np.concatenate([p.h for p in parts]),
        z=np.concatenate([p.z for p in parts]),
    )
    for p in parts:
        out.profit += p.profit
        out.captured += p.captured
        out.desorbed += p.desorbed
        out.energy_mwh += p.energy_mwh
        out.cycles += p.cycles
        out.elec_cost += p.elec_cost
        out.emitted += p.emitted
        out.thermal_used += p.thermal_used
        out.curtailed += p.curtailed
        out.active_steps += p.active_steps
    return out
