"""Grid search over plant design parameters and incentive sweeps.

Each grid point gets a fresh full-year dispatch run, so the surface stays
auditable: no surrogate model sits between the parameters and the cost.
Points are independent and evaluated in parallel, merged back in grid
order so results never depend on worker count.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dac import STEP_HOURS, Technology, ambient_factors_solid
from .economics import CostModel, EconomicsError, lco2, total_capex
from .policy import PolicyState, ScenarioSlice
from .solar import CollectorParams, StorageParams, thermal_flux
from .threshold import ThresholdConfig, run_year

DEFAULT_BUDGET = 500

# tie-break and grid iteration order for design axes
_AXIS_ORDER = ("cp", "cr", "t_target", "h_rated", "pv_kw", "battery_kwh")


@dataclass(frozen=True)
class DesignParams:
    """One candidate plant layout."""

    cp: float = 3.0
    cr: float = 1.0
    t_target: float = 400.0
    h_rated: float = 70.0
    pv_kw: float = 0.0
    battery_kwh: float = 0.0

    def __post_init__(self) -> None:
        if self.cp <= 0:
            raise ValueError("collector capacity must be positive")
        if self.cr < 1:
            raise ValueError("concentration ratio must be at least 1")
        if self.t_target < 300.0:
            raise ValueError("receiver target must clear the 300 C source floor")
        if self.h_rated < 0 or self.pv_kw < 0 or self.battery_kwh < 0:
            raise ValueError("capacities must be non-negative")

    def key(self) -> tuple[float, ...]:
        return tuple(getattr(self, a) for a in _AXIS_ORDER)


@dataclass
class ScenarioInputs:
    """Raw year-long series a design point is evaluated against.

    `dni` doubles as the PV capacity-factor series in stand-alone mode.
    Ambient temperature and humidity are optional; when present the
    per-step consumption and capture corrections are applied.
    """

    prices: np.ndarray
    carbon_intensity: np.ndarray
    dni: np.ndarray
    pi: float
    temp_c: np.ndarray | None = None
    rh: np.ndarray | None = None
    rho_e: float = 0.0
    mode: str = "grid"
    retention_per_step: float = 0.99986

    def __post_init__(self) -> None:
        self.prices = np.asarray(self.prices, dtype=float)
        self.carbon_intensity = np.asarray(self.carbon_intensity, dtype=float)
        self.dni = np.asarray(self.dni, dtype=float)
        n = len(self.prices)
        if len(self.carbon_intensity) != n or len(self.dni) != n:
            raise ValueError("scenario series have mismatched lengths")
        if self.temp_c is not None:
            self.temp_c = np.asarray(self.temp_c, dtype=float)
            self.rh = np.asarray(self.rh, dtype=float)
            if len(self.temp_c) != n or len(self.rh) != n:
                raise ValueError("ambient series have mismatched lengths")
        if self.mode not in ("grid", "standalone"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def __len__(self) -> int:
        return len(self.prices)


def build_slice(
    inputs: ScenarioInputs, design: DesignParams, ambient: bool = True
) -> tuple[ScenarioSlice, StorageParams]:
    """Specialize the raw scenario to one design point."""
    collector = CollectorParams(
        capacity_mwh_per_step=design.cp,
        concentration_ratio=design.cr,
        receiver_temp_c=design.t_target,
    )
    flux = thermal_flux(inputs.dni, collector)
    storage = StorageParams(
        rated_mwh=design.h_rated,
        retention_per_step=inputs.retention_per_step,
        target_temp_c=design.t_target,
    )
    n = len(inputs)
    if ambient and inputs.temp_c is not None:
        energy_factor, capture_factor = ambient_factors_solid(inputs.temp_c, inputs.rh)
    else:
        energy_factor = np.ones(n)
        capture_factor = np.ones(n)
    pv_energy = None
    battery = 0.0
    if inputs.mode == "standalone":
        pv_energy = inputs.dni * design.pv_kw * 1e-3 * STEP_HOURS
        battery = design.battery_kwh * 1e-3
    sl = ScenarioSlice(
        prices=inputs.prices,
        carbon_intensity=inputs.carbon_intensity,
        flux=flux,
        energy_factor=energy_factor,
        capture_factor=capture_factor,
        pi=inputs.pi,
        rho_e=inputs.rho_e,
        pv_energy=pv_energy,
        battery_mwh=battery,
    )
    return sl, storage


@dataclass(frozen=True)
class SweepRow:
    """Metrics for one evaluated design point."""

    design: DesignParams
    lco2: float
    net_co2_t: float
    capacity_factor: float
    abatement_per_capex: float
    profit: float

    def feasible(self) -> bool:
        return math.isfinite(self.lco2)


@dataclass
class SweepResult:
    rows: list[SweepRow]
    argmin_index: int

    @property
    def best(self) -> SweepRow:
        return self.rows[self.argmin_index]


def _evaluate_point(args) -> SweepRow:
    inputs, design, tech, model, cfg, ambient = args
    sl, storage = build_slice(inputs, design, ambient=ambient)
    schedule, _ = run_year(sl, tech, storage, cfg, PolicyState())
    capex = total_capex(design, model, tech, inputs.mode)
    try:
        breakdown = lco2(schedule, design, model, inputs.mode, tech, rho_e=inputs.rho_e)
        cost = breakdown.lco2
        net = breakdown.net_co2_t
        apc = net / capex * 1e6   # t per million USD
    except EconomicsError:
        cost = math.inf
        net = schedule.desorbed - (schedule.emitted if inputs.mode == "grid" else 0.0)
        apc = 0.0
    return SweepRow(
        design=design,
        lco2=cost,
        net_co2_t=net,
        capacity_factor=schedule.capacity_factor,
        abatement_per_capex=apc,
        profit=schedule.profit,
    )


def _expand_grid(axes: dict[str, list[float]]) -> list[DesignParams]:
    unknown = set(axes) - set(_AXIS_ORDER)
    if unknown:
        raise ValueError(f"unknown design axes: {sorted(unknown)}")
    names = [a for a in _AXIS_ORDER if a in axes]
    if any(len(axes[n]) == 0 for n in names):
        raise ValueError("empty design grid")
    combos = itertools.product(*(axes[n] for n in names))
    return [DesignParams(**dict(zip(names, combo))) for combo in combos]


def default_jobs() -> int:
    env = os.environ.get("HELIODAC_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_points(points, args_iter, jobs: int) -> list[SweepRow]:
    if jobs <= 1 or len(points) <= 1:
        return [_evaluate_point(a) for a in args_iter]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_evaluate_point, args_iter))


def sweep(
    inputs: ScenarioInputs,
    tech: Technology,
    axes: dict[str, list[float]],
    objective: str = "lco2",
    model: CostModel | None = None,
    cfg: ThresholdConfig | None = None,
    budget: int = DEFAULT_BUDGET,
    jobs: int | None = None,
    ambient: bool = True,
) -> SweepResult:
    """Exhaustive grid search, argmin by the chosen objective.

    Ties break toward smaller capital cost, then lexicographic parameter
    order, so the winner is reproducible.
    """
    if objective not in ("lco2", "abatement_per_capex"):
        raise ValueError(f"unknown objective {objective!r}")
    points = _expand_grid(axes)
    if not points:
        raise ValueError("empty design grid")
    if len(points) > budget:
        raise ValueError(f"grid has {len(points)} points, budget is {budget}")
    model = model or CostModel()
    cfg = cfg or ThresholdConfig()
    jobs = default_jobs() if jobs is None else jobs

    args_iter = [(inputs, p, tech, model, cfg, ambient) for p in points]
    rows = _run_points(points, args_iter, jobs)

    def rank(i: int) -> tuple:
        row = rows[i]
        if objective == "lco2":
            primary = row.lco2
        else:
            primary = -row.abatement_per_capex
        capex = total_capex(row.design, model, tech, inputs.mode)
        return (primary, capex, row.design.key())

    finite = [i for i, r in enumerate(rows) if r.feasible()]
    candidates = finite if finite else list(range(len(rows)))
    best = min(candidates, key=rank)
    return SweepResult(rows=rows, argmin_index=best)


@dataclass(frozen=True)
class IncentivePoint:
    """Year outcome at one carbon incentive level."""

    pi: float
    profit: float
    capacity_factor: float
    h_rated: float
    payback_years: float
    lco2: float
    net_co2_t: float


@dataclass
class IncentiveResult:
    points: list[IncentivePoint]
    profit_monotone: bool
    cf_monotone: bool


def incentive_sweep(
    inputs: ScenarioInputs,
    tech: Technology,
    design: DesignParams,
    pi_values: list[float],
    model: CostModel | None = None,
    cfg: ThresholdConfig | None = None,
    h_axis: list[float] | None = None,
    jobs: int | None = None,
) -> IncentiveResult:
    """Re-dispatch the year at each incentive; optionally re-pick storage.

    With an `h_axis` the storage rating is re-optimized (lowest levelized
    cost) at every incentive level; otherwise the design's rating is used
    throughout and each incentive costs exactly one dispatch run.
    """
    if any(p < 0 for p in pi_values):
        raise ValueError("incentives must be non-negative")
    model = model or CostModel()
    cfg = cfg or ThresholdConfig()
    jobs = default_jobs() if jobs is None else jobs
    storages = h_axis or [design.h_rated]

    combos = [(pi, h) for pi in pi_values for h in storages]
    args_iter = []
    for pi, h in combos:
        inp = replace_pi(inputs, pi)
        args_iter.append((inp, replace(design, h_rated=h), tech, model, cfg, True))
    rows = _run_points(combos, args_iter, jobs)

    points: list[IncentivePoint] = []
    for i, pi in enumerate(pi_values):
        group = rows[i * len(storages) : (i + 1) * len(storages)]
        best = min(group, key=lambda r: (r.lco2, r.design.h_rated))
        capex = total_capex(best.design, model, tech, inputs.mode)
        points.append(
            IncentivePoint(
                pi=pi,
                profit=best.profit,
                capacity_factor=best.capacity_factor,
                h_rated=best.design.h_rated,
                payback_years=capex / best.profit if best.profit > 0 else math.inf,
                lco2=best.lco2,
                net_co2_t=best.net_co2_t,
            )
        )

    ordered = sorted(points, key=lambda p: p.pi)
    profit_monotone = all(
        a.profit <= b.profit + 1e-9 for a, b in zip(ordered, ordered[1:])
    )
    cf_monotone = all(
        a.capacity_factor <= b.capacity_factor + 1e-9
        for a, b in zip(ordered, ordered[1:])
    )
    return IncentiveResult(points=points, profit_monotone=profit_monotone, cf_monotone=cf_monotone)


def replace_pi(inputs: ScenarioInputs, pi: float) -> ScenarioInputs:
    return ScenarioInputs(
        prices=inputs.prices,
        carbon_intensity=inputs.carbon_intensity,
        dni=inputs.dni,
        pi=pi,
        temp_c=inputs.temp_c,
        rh=inputs.rh,
        rho_e=inputs.rho_e,
        mode=inputs.mode,
        retention_per_step=inputs.retention_per_step,
    )
