"""Batch stand-alone assessment over a location grid.

Every masked location gets the same fixed plant design and two full-year
dispatch runs: one nominal, one with ambient weather corrections applied
per step. Locations are independent, so the batch parallelizes freely;
output order always follows the input grid.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dac import Technology
from .design import DesignParams, ScenarioInputs, build_slice, default_jobs
from .economics import CostModel, EconomicsError, lco2
from .policy import PolicyState
from .threshold import ThresholdConfig, run_year
from .timeseries import (
    MASTER_STEP_SECONDS,
    LocationGrid,
    load_ambient,
    load_series,
    resample_repeat,
)

STEPS_PER_DAY = 86400 // MASTER_STEP_SECONDS


@dataclass(frozen=True)
class LocationResult:
    """Assessment outcome for one grid point."""

    lat: float
    lon: float
    lco2: float
    lco2_ambient: float
    cf_mean: float
    cf_daily_std: float
    dac_cf: float
    flag: str = "ok"


def _to_master(series_values: np.ndarray, step_seconds: float) -> np.ndarray:
    factor = step_seconds / MASTER_STEP_SECONDS
    if factor == 1:
        return np.asarray(series_values, dtype=float)
    if factor != int(factor) or factor < 1:
        raise ValueError("series step must be a whole multiple of the master step")
    return np.repeat(np.asarray(series_values, dtype=float), int(factor))


def _daily_std(dni: np.ndarray) -> float:
    days = len(dni) // STEPS_PER_DAY
    if days == 0:
        return 0.0
    daily = dni[: days * STEPS_PER_DAY].reshape(days, STEPS_PER_DAY).mean(axis=1)
    return float(np.std(daily))


def _assess_point(args) -> LocationResult:
    (lat, lon, solar_path, ambient_path, design, tech, model, cfg, pi) = args
    try:
        solar = load_series(solar_path)
        ambient = load_ambient(ambient_path)
    except (OSError, ValueError) as exc:
        return LocationResult(
            lat=lat, lon=lon, lco2=math.inf, lco2_ambient=math.inf,
            cf_mean=0.0, cf_daily_std=0.0, dac_cf=0.0,
            flag=f"missing: {exc.__class__.__name__}",
        )

    dni = _to_master(solar.values, solar.step_seconds)
    temp = _to_master(ambient.temp_c, ambient.step_seconds)
    rh = _to_master(ambient.rh, ambient.step_seconds)
    n = min(len(dni), len(temp))
    dni, temp, rh = dni[:n], temp[:n], rh[:n]

    inputs = ScenarioInputs(
        prices=np.zeros(n),
        carbon_intensity=np.zeros(n),
        dni=dni,
        pi=pi,
        temp_c=temp,
        rh=rh,
        mode="standalone",
    )

    def one_run(use_ambient: bool) -> tuple[float, float]:
        sl, storage = build_slice(inputs, design, ambient=use_ambient)
        schedule, _ = run_year(sl, tech, storage, cfg, PolicyState())
        try:
            cost = lco2(schedule, design, model, "standalone", tech).lco2
        except EconomicsError:
            cost = math.inf
        return cost, schedule.capacity_factor

    nominal, dac_cf = one_run(False)
    corrected, _ = one_run(True)
    flag = "ok"
    if not (math.isfinite(nominal) and math.isfinite(corrected)):
        flag = "no_capture"
    return LocationResult(
        lat=lat, lon=lon, lco2=nominal, lco2_ambient=corrected,
        cf_mean=float(np.mean(dni)), cf_daily_std=_daily_std(dni),
        dac_cf=dac_cf, flag=flag,
    )


def assess(
    grid: LocationGrid,
    design: DesignParams,
    tech: Technology,
    model: CostModel | None = None,
    cfg: ThresholdConfig | None = None,
    pi: float = 0.0,
    jobs: int | None = None,
) -> list[LocationResult]:
    """Run the fixed design at every grid point, in grid order.

    A point whose series cannot be loaded is reported with an error flag
    instead of aborting the batch.
    """
    model = model or CostModel()
    cfg = cfg or ThresholdConfig()
    jobs = default_jobs() if jobs is None else jobs
    args = [
        (
            pt.lat, pt.lon,
            str(grid.resolve(pt.solar_path)), str(grid.resolve(pt.ambient_path)),
            design, tech, model, cfg, pi,
        )
        for pt in grid.points
    ]
    if jobs <= 1 or len(args) <= 1:
        return [_assess_point(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_assess_point, args))


@dataclass
class Summary:
    """Threshold counts, best sites, and the cf-to-cost envelope."""

    count: int
    below: dict[float, float]
    best: list[LocationResult]
    fit_coeffs: tuple[float, float, float]

    def fraction_below(self, threshold: float) -> float:
        return self.below[threshold]


def lower_bound_fit(cf: np.ndarray, cost: np.ndarray) -> tuple[float, float, float]:
    """Quadratic in cf that underestimates every point's cost.

    Least-squares first, then the constant term drops until no point sits
    below the curve, which makes all residuals non-negative by
    construction.
    """
    ok = np.isfinite(cost)
    cf, cost = cf[ok], cost[ok]
    if len(cf) < 3 or np.ptp(cf) == 0:
        c = float(np.min(cost)) if len(cf) else 0.0
        return (0.0, 0.0, c)
    a, b, c = np.polyfit(cf, cost, 2)
    fitted = a * cf * cf + b * cf + c
    c -= float(np.max(fitted - cost))
    return (float(a), float(b), float(c))


def summarize(
    results: list[LocationResult],
    thresholds: list[float] = (140.0, 180.0, 220.0, 300.0, 400.0),
    best_n: int = 10,
) -> Summary:
    if not results:
        raise ValueError("nothing to summarize")
    ok = [r for r in results if r.flag == "ok"]
    costs = np.array([r.lco2_ambient for r in ok]) if ok else np.array([])
    below = {}
    for th in thresholds:
        below[float(th)] = float(np.mean(costs < th)) if len(costs) else 0.0
    best = sorted(ok, key=lambda r: (r.lco2_ambient, r.lat, r.lon))[:best_n]
    cf = np.array([r.cf_mean for r in ok])
    coeffs = lower_bound_fit(cf, costs) if len(ok) else (0.0, 0.0, 0.0)
    return Summary(count=len(results), below=below, best=best, fit_coeffs=coeffs)


@dataclass(frozen=True)
class DiffPoint:
    lat: float
    lon: float
    diff: float
    matched: bool


def diff_grid(
    a: list[LocationResult],
    b: list[tuple[float, float, float]],
    tol: float = 1e-6,
    use_ambient: bool = True,
) -> list[DiffPoint]:
    """Per-point cost difference a − b on matching coordinates.

    `b` rows are (lat, lon, cost). Points of `a` without a counterpart
    within tolerance come back flagged unmatched; two counterparts within
    tolerance of one point is an error.
    """
    out: list[DiffPoint] = []
    b_arr = np.array([(q[0], q[1]) for q in b]) if b else np.empty((0, 2))
    for r in a:
        if len(b_arr):
            dist = np.max(np.abs(b_arr - np.array([r.lat, r.lon])), axis=1)
            hits = np.flatnonzero(dist <= tol)
        else:
            hits = np.array([], dtype=int)
        if len(hits) > 1:
            raise ValueError(
                f"ambiguous match at ({r.lat}, {r.lon}): {len(hits)} candidates"
            )
        if len(hits) == 1:
            own = r.lco2_ambient if use_ambient else r.lco2
            out.append(DiffPoint(r.lat, r.lon, own - b[int(hits[0])][2], True))
        else:
            out.append(DiffPoint(r.lat, r.lon, math.nan, False))
    return out
