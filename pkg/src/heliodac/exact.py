"""Exhaustive small-horizon scheduler and the schedule constraint checker.

Every phase sequence over the horizon is enumerated (3^T of them, with the
rates saturated at their caps), so the result is the true optimum of that
policy class. Serves as the optimality oracle for the threshold heuristic.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .dac import ADSORB, DESORB, IDLE, Technology
from .policy import PolicyState, ScenarioSlice, Schedule
from .solar import StorageParams, effective_capacity

HORIZON_MAX = 16
_VEC_DEPTH = 13         # deepest level grown as one flat array (3^13 states)
_HEAT_SLACK = 1e-9


class ExactSolveError(ValueError):
    pass


def _consts(sl: ScenarioSlice, tech: Technology, storage: StorageParams) -> dict:
    return {
        "lam": sl.effective_prices,
        "e": sl.carbon_intensity,
        "flux": sl.flux,
        "cfac": sl.capture_factor,
        "efac": sl.energy_factor,
        "pi": sl.pi,
        "xm": tech.X_max,
        "eps": tech.rate_epsilon,
        "h_eff": effective_capacity(storage),
        "ret": storage.retention_per_step,
        "heat_need": tech.H * (1.0 - _HEAT_SLACK),
    }


def _step_scalar(c, tech, t, X, h, k, phase):
    """Advance one state by one phase choice; returns None when infeasible."""
    lam_t = c["lam"][t]
    s_t = c["flux"][t]
    a = d = 0.0
    z = 0
    dprofit = 0.0
    heat_draw = 0.0
    if phase == ADSORB:
        cap = max(0.0, c["cfac"][t] * (tech.beta_a1 + tech.beta_a2 * X / c["xm"]) * c["xm"])
        a = min(cap, c["xm"] - X)
        z = 1 if k == 0 else 0
        k = 1
        dprofit -= lam_t * c["efac"][t] * tech.P_a + tech.S * z
    elif phase == DESORB:
        if c["ret"] * h + s_t < c["heat_need"]:
            return None
        cap = max(0.0, (tech.beta_d1 + tech.beta_d2 * X / c["xm"]) * c["xm"])
        d = min(cap, X)
        k = 0
        heat_draw = tech.H
        dprofit += c["pi"] * d - lam_t * c["efac"][t] * tech.P_d
    elif phase != IDLE:
        raise ValueError(f"unknown phase {phase}")
    X = X + a - d
    h_pre = c["ret"] * h + s_t - heat_draw
    h = min(h_pre, c["h_eff"])
    return X, h, k, z, a, d, dprofit, h_pre - h


def _grow_level(c, tech, t, X, h, k, profit):
    """Branch every partial sequence into idle/adsorb/desorb, vectorized."""
    n = len(X)
    X = np.repeat(X, 3)
    h = np.repeat(h, 3)
    k = np.repeat(k, 3)
    profit = np.repeat(profit, 3)
    phase = np.tile(np.array([IDLE, ADSORB, DESORB], dtype=np.int8), n)

    lam_t = c["lam"][t]
    s_t = c["flux"][t]
    is_a = phase == ADSORB
    is_d = phase == DESORB

    frac = X / c["xm"]
    acap = np.maximum(c["cfac"][t] * (tech.beta_a1 + tech.beta_a2 * frac) * c["xm"], 0.0)
    dcap = np.maximum((tech.beta_d1 + tech.beta_d2 * frac) * c["xm"], 0.0)
    dead = is_d & ((c["ret"] * h + s_t) < c["heat_need"])

    a = np.where(is_a, np.minimum(acap, c["xm"] - X), 0.0)
    d = np.where(is_d, np.minimum(dcap, X), 0.0)
    z = is_a & (k == 0)
    profit = profit + c["pi"] * d - lam_t * c["efac"][t] * (tech.P_a * is_a + tech.P_d * is_d) - tech.S * z
    profit[dead] = -np.inf
    X = X + a - d
    k = np.where(is_a, 1, np.where(is_d, 0, k))
    h = np.minimum(c["ret"] * h + s_t - tech.H * is_d, c["h_eff"])
    np.maximum(h, 0.0, out=h)   # keep dead branches from dragging h negative
    return X, h, k, profit


def _best_over_suffix(c, tech, t0, T, X0, h0, k0, p0):
    X = np.array([X0])
    h = np.array([h0])
    k = np.array([k0])
    profit = np.array([p0])
    for t in range(t0, T):
        X, h, k, profit = _grow_level(c, tech, t, X, h, k, profit)
    idx = int(np.argmax(profit))
    return float(profit[idx]), idx


def solve_exact(
    sl: ScenarioSlice,
    tech: Technology,
    storage: StorageParams,
    start_state: PolicyState = PolicyState(),
) -> Schedule:
    """Profit-maximal phase schedule over a short horizon."""
    T = len(sl)
    if T == 0:
        raise ExactSolveError("empty horizon")
    if T > HORIZON_MAX:
        raise ExactSolveError(f"horizon {T} exceeds exhaustive limit {HORIZON_MAX}")
    h_eff = effective_capacity(storage)
    if not 0 <= start_state.X <= tech.X_max:
        raise ExactSolveError("initial saturation outside [0, X_max]")
    if not 0 <= start_state.h <= h_eff + 1e-12:
        raise ExactSolveError("initial storage level outside [0, h_eff]")

    c = _consts(sl, tech, storage)
    prefix_len = max(0, T - _VEC_DEPTH)
    best_profit = -math.inf
    best_seq: tuple[int, ...] | None = None

    for prefix in itertools.product((IDLE, ADSORB, DESORB), repeat=prefix_len):
        X, h, k, profit = start_state.X, start_state.h, start_state.k, 0.0
        ok = True
        for t, phase in enumerate(prefix):
            stepped = _step_scalar(c, tech, t, X, h, k, phase)
            if stepped is None:
                ok = False
                break
            X, h, k, z, _a, _d, dp, _cur = stepped
            profit += dp
        if not ok:
            continue
        suffix_profit, idx = _best_over_suffix(c, tech, prefix_len, T, X, h, k, profit)
        if suffix_profit > best_profit:
            digits = []
            for p in range(T - prefix_len - 1, -1, -1):
                digits.append((idx // 3**p) % 3)
            best_profit = suffix_profit
            best_seq = prefix + tuple(digits)

    if best_seq is None:
        raise ExactSolveError("no feasible schedule found")
    return replay_sequence(sl, tech, storage, best_seq, start_state)


def replay_sequence(
    sl: ScenarioSlice,
    tech: Technology,
    storage: StorageParams,
    phases,
    start_state: PolicyState = PolicyState(),
) -> Schedule:
    """Materialize the full Schedule for a concrete phase sequence."""
    c = _consts(sl, tech, storage)
    T = len(phases)
    out = Schedule(
        phase=np.array(phases, dtype=np.int8), a=np.zeros(T), d=np.zeros(T),
        X=np.zeros(T), h=np.zeros(T), z=np.zeros(T, dtype=np.int8),
    )
    X, h, k = start_state.X, start_state.h, start_state.k
    for t, phase in enumerate(phases):
        stepped = _step_scalar(c, tech, t, X, h, k, phase)
        if stepped is None:
            raise ExactSolveError(f"step {t}: desorption without enough stored heat")
        X, h, k, z, a, d, dprofit, cur = stepped
        out.a[t], out.d[t], out.X[t], out.h[t], out.z[t] = a, d, X, h, z
        out.profit += dprofit
        out.captured += a
        out.desorbed += d
        e_step = c["efac"][t] * (tech.P_a if phase == ADSORB else tech.P_d if phase == DESORB else 0.0)
        out.energy_mwh += e_step
        out.elec_cost += c["lam"][t] * e_step
        out.emitted += c["e"][t] * e_step
        out.thermal_used += tech.H if phase == DESORB else 0.0
        out.curtailed += cur
        out.cycles += z
        out.active_steps += 1 if phase in (ADSORB, DESORB) else 0
    return out


def audit_profit(schedule: Schedule, sl: ScenarioSlice, tech: Technology) -> float:
    """Recompute the objective from the step log alone."""
    lam = sl.effective_prices
    is_a = schedule.phase == ADSORB
    is_d = schedule.phase == DESORB
    elec = lam * sl.energy_factor * (tech.P_a * is_a + tech.P_d * is_d)
    return float(np.sum(sl.pi * schedule.d - elec - tech.S * schedule.z))


def verify_schedule(
    schedule: Schedule,
    sl: ScenarioSlice,
    tech: Technology,
    storage: StorageParams,
    start_state: PolicyState = PolicyState(),
) -> list[str]:
    """Re-check the operating constraint set; empty list means feasible.

    Constraint numbers follow the operation model: (2) phase exclusivity,
    (3)/(4) rate caps, (5)/(6) phase-rate consistency, (9) saturation
    balance, (10) saturation bounds, (11)-(14) cycle flag logic, (15)
    storage bounds, (16) thermal balance and desorption feasibility.
    """
    v: list[str] = []
    xm = tech.X_max
    tol = 1e-9 * max(1.0, xm)
    h_eff = effective_capacity(storage)
    h_tol = 1e-9 * max(1.0, h_eff)
    ret = storage.retention_per_step
    lam = sl.effective_prices

    if len(schedule) != len(sl):
        return [f"schedule length {len(schedule)} does not match scenario {len(sl)}"]

    X_prev, h_prev, k_prev = start_state.X, start_state.h, start_state.k
    if k_prev not in (0, 1):
        v.append("constraint (11): initial cycle flag must be 0 or 1")
    for t in range(len(schedule)):
        phase = int(schedule.phase[t])
        a = float(schedule.a[t])
        d = float(schedule.d[t])
        X = float(schedule.X[t])
        h = float(schedule.h[t])
        z = int(schedule.z[t])
        u = 1 if phase == ADSORB else 0
        w = 1 if phase == DESORB else 0

        if phase not in (IDLE, ADSORB, DESORB) or (a > tol and d > tol):
            v.append(f"step {t}: constraint (2): adsorption and desorption overlap")
        acap = max(0.0, sl.capture_factor[t] * (tech.beta_a1 + tech.beta_a2 * X_prev / xm) * xm)
        dcap = max(0.0, (tech.beta_d1 + tech.beta_d2 * X_prev / xm) * xm)
        if a > acap + tol:
            v.append(f"step {t}: constraint (3): a={a:.6g} above cap {acap:.6g}")
        if d > dcap + tol:
            v.append(f"step {t}: constraint (4): d={d:.6g} above cap {dcap:.6g}")
        if a > tol and not u:
            v.append(f"step {t}: constraint (5): adsorption outside adsorb phase")
        if d > tol and not w:
            v.append(f"step {t}: constraint (6): desorption outside desorb phase")
        if abs(X - (X_prev + a - d)) > tol:
            v.append(f"step {t}: constraint (9): saturation balance violated")
        if X < -tol or X > xm + tol:
            v.append(f"step {t}: constraint (10): X={X:.6g} outside [0, {xm:.6g}]")
        k_now = 1 if u else (0 if w else k_prev)
        if z != (1 if (k_now == 1 and k_prev == 0) else 0):
            v.append(f"step {t}: constraint (12)-(14): cycle flag/switch mismatch")
        if h < -h_tol or h > h_eff + h_tol:
            v.append(f"step {t}: constraint (15): h={h:.6g} outside [0, {h_eff:.6g}]")
        supply = ret * h_prev + sl.flux[t]
        if h > supply - w * tech.H + h_tol:
            v.append(f"step {t}: constraint (16): storage balance violated")
        if w and supply < tech.H * (1.0 - _HEAT_SLACK) - h_tol:
            v.append(f"step {t}: constraint (16): desorption without enough stored heat")
        _ = lam  # prices feed the objective, not feasibility
        X_prev, h_prev, k_prev = X, h, k_now
    return v
