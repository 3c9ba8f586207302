"""Chunked price-threshold scheduler for year-scale runs.

Operation is gated on a single activation price per chunk: steps priced at
or below it run the phase automaton, everything else idles. The threshold
is tuned chunk by chunk with a guess grid plus golden-section refinement
over a look-ahead window, and only the chunk itself is committed before
moving on with the carried plant state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dac import Technology
from .policy import (
    PolicyState,
    ScenarioSlice,
    Schedule,
    SimOutcome,
    concat_schedules,
    simulate_thresholds,
)
from .solar import StorageParams

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ThresholdConfig:
    chunk_steps: int = 288
    lookahead_steps: int = 288
    guess_min: float = -10.0
    guess_max: float = 500.0
    guess_spacing: float = 10.0
    search_tol: float = 0.01

    def __post_init__(self) -> None:
        if self.chunk_steps < 1:
            raise ValueError("chunk_steps must be at least 1")
        if self.lookahead_steps < 0:
            raise ValueError("lookahead_steps must be non-negative")
        if self.guess_min >= self.guess_max:
            raise ValueError("guess_min must lie below guess_max")
        if self.guess_spacing <= 0 or self.search_tol <= 0:
            raise ValueError("spacing and tolerance must be positive")


@dataclass(frozen=True)
class ChunkResult:
    lam_opt: float
    profit: float
    co2_desorbed: float
    X_remain: float
    boost: float
    end_state: PolicyState


def boost(profit_chunk: float, co2_chunk: float, X_remain: float) -> float:
    """Search-time credit for saturation retained at the window edge.

    Values leftover loading at the window's realized profit per ton. Only
    steers the threshold search; committed profit never includes it.
    """
    if co2_chunk < 0:
        raise ValueError("desorbed CO2 cannot be negative")
    if co2_chunk > 0:
        return (profit_chunk / co2_chunk) * X_remain
    return 0.0


def simulate_policy(
    sl: ScenarioSlice,
    tech: Technology,
    storage: StorageParams,
    lam_threshold: float,
    start_state: PolicyState = PolicyState(),
) -> ChunkResult:
    """Run the activation policy at one fixed threshold over the slice."""
    if len(sl) == 0:
        raise ValueError("empty scenario slice")
    out = simulate_thresholds(sl, tech, storage, [lam_threshold], start_state)
    profit = float(out.profit[0])
    co2 = float(out.desorbed[0])
    x_rem = float(out.X[0])
    return ChunkResult(
        lam_opt=float(lam_threshold),
        profit=profit,
        co2_desorbed=co2,
        X_remain=x_rem,
        boost=boost(profit, co2, x_rem),
        end_state=PolicyState(x_rem, float(out.h[0]), int(out.k[0]), float(out.battery[0])),
    )


def _plateau_table(
    window: ScenarioSlice,
    tech: Technology,
    storage: StorageParams,
    state: PolicyState,
) -> tuple[np.ndarray, np.ndarray, SimOutcome]:
    """Evaluate every distinct activation set once.

    The window objective is piecewise-constant in the threshold, changing
    only at observed price values; simulating those representatives (plus
    one below the cheapest step) covers the whole real line.
    """
    cands = np.unique(window.effective_prices)
    reps = np.concatenate(([cands[0] - 1.0], cands))
    out = simulate_thresholds(window, tech, storage, reps, state)
    objective = out.profit + np.where(
        out.desorbed > 0.0, np.divide(out.profit, out.desorbed, where=out.desorbed > 0.0) * out.X, 0.0
    )
    return cands, objective, out


def _golden_section(f, lo: float, hi: float, tol: float) -> None:
    """Deterministic golden-section descent; f records its own best probe."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    f((a + b) / 2.0)


def _optimize_window(
    window: ScenarioSlice,
    tech: Technology,
    storage: StorageParams,
    cfg: ThresholdConfig,
    state: PolicyState,
    commit_steps: int,
) -> tuple[ChunkResult, Schedule]:
    cands, objective, window_out = _plateau_table(window, tech, storage, state)
    probed: set[int] = set()

    def probe(lam: float) -> float:
        idx = int(np.searchsorted(cands, lam, side="right"))  # 0 = below all prices
        probed.add(idx)
        return -float(objective[idx])

    guesses = np.arange(cfg.guess_min, cfg.guess_max + cfg.guess_spacing / 2, cfg.guess_spacing)
    for g in guesses:
        _golden_section(probe, g - cfg.guess_spacing, g + cfg.guess_spacing, cfg.search_tol)

    best_idx = min(probed, key=lambda i: (-objective[i], i))

    if best_idx == 0:
        lam_star = cfg.guess_min if cands[0] > cfg.guess_min else float(cands[0]) - 1.0
    else:
        lo = float(cands[best_idx - 1])
        hi = float(cands[best_idx]) if best_idx < len(cands) else lo + 2.0 * cfg.guess_spacing
        lam_star = (lo + hi) / 2.0

    committed = simulate_thresholds(
        window.window(0, commit_steps), tech, storage, [lam_star], state, record=True
    )
    log = committed.log
    assert log is not None
    x_rem = float(committed.X[0])
    co2_committed = log.desorbed
    if co2_committed > 0.0:
        ratio = log.profit / co2_committed
    elif float(window_out.desorbed[best_idx]) > 0.0:
        ratio = float(window_out.profit[best_idx]) / float(window_out.desorbed[best_idx])
    else:
        ratio = 0.0
    result = ChunkResult(
        lam_opt=float(lam_star),
        profit=log.profit,
        co2_desorbed=co2_committed,
        X_remain=x_rem,
        boost=ratio * x_rem,
        end_state=PolicyState(
            x_rem, float(committed.h[0]), int(committed.k[0]), float(committed.battery[0])
        ),
    )
    return result, log


def optimize_chunk(
    window: ScenarioSlice,
    tech: Technology,
    storage: StorageParams,
    cfg: ThresholdConfig,
    start_state: PolicyState = PolicyState(),
) -> ChunkResult:
    """Tune the threshold on a chunk+look-ahead window; commit the chunk."""
    if len(window) == 0:
        raise ValueError("empty optimization window")
    commit = min(cfg.chunk_steps, len(window))
    result, _ = _optimize_window(window, tech, storage, cfg, start_state, commit)
    return result


def run_year(
    scenario: ScenarioSlice,
    tech: Technology,
    storage: StorageParams,
    cfg: ThresholdConfig = ThresholdConfig(),
    start_state: PolicyState = PolicyState(),
) -> tuple[Schedule, list[ChunkResult]]:
    """Sequential chunk optimization with plant state carried across chunks."""
    T = len(scenario)
    if T == 0:
        raise ValueError("empty scenario")
    state = start_state
    logs: list[Schedule] = []
    chunks: list[ChunkResult] = []
    for lo in range(0, T, cfg.chunk_steps):
        hi = min(lo + cfg.chunk_steps + cfg.lookahead_steps, T)
        window = scenario.window(lo, hi)
        commit = min(cfg.chunk_steps, hi - lo)
        result, log = _optimize_window(window, tech, storage, cfg, state, commit)
        logs.append(log)
        chunks.append(result)
        state = result.end_state
    return concat_schedules(logs), chunks
