"""Command-line entry point.

Subcommands cover the full pipeline: schedule optimization, exhaustive
short-horizon solves, thermal verification, design and incentive sweeps,
batch site assessment, grid differencing, and result summaries. Every
command that writes files also writes a manifest with the config hash and
input digests. Exit codes: 0 success, 1 runtime failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .assessment import LocationResult, assess, diff_grid, summarize
from .config import ConfigError, RunConfig, build_inputs, load_config, write_manifest
from .dac import PHASE_NAMES
from .design import build_slice, incentive_sweep, sweep
from .economics import EconomicsError, lco2
from .exact import ExactSolveError, solve_exact
from .policy import PolicyState, Schedule
from .solar import StorageParams
from .thermo import CalibrationError, calibrate, make_plant, simulate_schedule
from .threshold import run_year
from .timeseries import SchemaError, apply_masks, load_grid

_PHASE_CODES = {name: code for code, name in PHASE_NAMES.items()}


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _schedule_rows(schedule: Schedule):
    names = schedule.phase_names()
    for t in range(len(schedule)):
        yield (
            t,
            names[t],
            repr(round(float(schedule.a[t]), 9)),
            repr(round(float(schedule.d[t]), 9)),
            repr(round(float(schedule.X[t]), 9)),
            repr(round(float(schedule.h[t]), 9)),
            int(schedule.z[t]),
        )


def write_schedule_csv(schedule: Schedule, path: Path) -> None:
    _write_csv(path, ["step", "phase", "a", "d", "X", "h", "z"], _schedule_rows(schedule))


def read_schedule_csv(path: Path) -> Schedule:
    """Rebuild the per-step log (not the totals) from a schedule CSV."""
    if not Path(path).is_file():
        raise ConfigError(f"schedule file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["step", "phase", "a", "d", "X", "h", "z"]:
            raise SchemaError(f"{path}: expected header step,phase,a,d,X,h,z")
        phase, a, d, X, h, z = [], [], [], [], [], []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise SchemaError(f"{path}:{i}: expected 7 fields")
            name = row[1].strip()
            if name not in _PHASE_CODES:
                raise SchemaError(f"{path}:{i}: unknown phase {name!r}")
            phase.append(_PHASE_CODES[name])
            a.append(float(row[2]))
            d.append(float(row[3]))
            X.append(float(row[4]))
            h.append(float(row[5]))
            z.append(int(row[6]))
    if not phase:
        raise SchemaError(f"{path}: no schedule rows")
    return Schedule(
        phase=np.array(phase, dtype=np.int8),
        a=np.array(a),
        d=np.array(d),
        X=np.array(X),
        h=np.array(h),
        z=np.array(z, dtype=np.int8),
        desorbed=float(np.sum(d)),
        active_steps=int(np.sum(np.array(phase) != 0)),
    )


def write_hourly_profile(schedule: Schedule, path: Path) -> None:
    """Mean operation by hour of day across the whole run."""
    n = len(schedule)
    steps_per_hour = 12
    hours = (np.arange(n) // steps_per_hour) % 24
    rows = []
    for hr in range(24):
        m = hours == hr
        if not np.any(m):
            continue
        rows.append(
            (
                hr,
                repr(round(float(np.mean(schedule.phase[m] == 1)), 6)),
                repr(round(float(np.mean(schedule.phase[m] == 2)), 6)),
                repr(round(float(np.mean(schedule.phase[m] == 0)), 6)),
                repr(round(float(np.mean(schedule.d[m])), 9)),
                repr(round(float(np.mean(schedule.h[m])), 6)),
            )
        )
    _write_csv(
        path,
        ["hour", "adsorb_frac", "desorb_frac", "idle_frac", "co2_mean_t", "storage_mean_mwh"],
        rows,
    )


def _summary_payload(cfg: RunConfig, schedule: Schedule, breakdown=None) -> dict:
    out = {
        "mode": cfg.mode,
        "pi": cfg.pi,
        "profit_usd": round(schedule.profit, 2),
        "co2_captured_t": round(schedule.captured, 3),
        "co2_desorbed_t": round(schedule.desorbed, 3),
        "co2_emitted_t": round(schedule.emitted, 3),
        "energy_mwh": round(schedule.energy_mwh, 3),
        "electricity_cost_usd": round(schedule.elec_cost, 2),
        "thermal_used_mwh": round(schedule.thermal_used, 3),
        "curtailed_mwh": round(schedule.curtailed, 3),
        "cycles": int(schedule.cycles),
        "capacity_factor": round(schedule.capacity_factor, 6),
        "steps": len(schedule),
    }
    if breakdown is not None:
        out["lco2_usd_per_t"] = round(breakdown.lco2, 3)
        out["net_co2_t"] = round(breakdown.net_co2_t, 3)
        out["capture_efficiency"] = round(breakdown.capture_efficiency, 6)
        out["payback_years"] = (
            None if not np.isfinite(breakdown.payback_years)
            else round(breakdown.payback_years, 3)
        )
        out["cost_breakdown_usd"] = {
            "dac_capex": round(breakdown.dac_capex, 2),
            "sorbent_om": round(breakdown.sorbent_om, 2),
            "electricity": round(breakdown.electricity, 2),
            "thermal": round(breakdown.thermal, 2),
        }
        out["cost_shares"] = {k: round(v, 4) for k, v in breakdown.shares.items()}
    return out


# ---------------------------------------------------------------------------
# subcommands


def _cmd_optimize(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    inputs = build_inputs(cfg)
    tech = cfg.load_tech()
    design = cfg.design_params()
    sl, storage = build_slice(inputs, design, ambient=not args.no_ambient)
    schedule, _chunks = run_year(sl, tech, storage, cfg.threshold_config(), PolicyState())

    breakdown = None
    try:
        breakdown = lco2(schedule, design, cfg.cost_model(), cfg.mode, tech, cfg.rho_e)
    except EconomicsError as exc:
        print(f"economics skipped: {exc}", file=sys.stderr)

    out = Path(args.out) if args.out else cfg.out_dir
    write_schedule_csv(schedule, out / "schedule.csv")
    write_hourly_profile(schedule, out / "hourly_profile.csv")
    _write_json(out / "summary.json", _summary_payload(cfg, schedule, breakdown))
    write_manifest(cfg, "optimize", out)
    print(
        f"optimize: profit={schedule.profit:.2f} usd, "
        f"captured={schedule.desorbed:.1f} t, cf={schedule.capacity_factor:.4f}"
    )
    if breakdown is not None:
        print(f"optimize: lco2={breakdown.lco2:.2f} usd/t over {breakdown.net_co2_t:.1f} net t")
    return 0


def _cmd_exact(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    inputs = build_inputs(cfg)
    tech = cfg.load_tech()
    sl, storage = build_slice(inputs, cfg.design_params(), ambient=not args.no_ambient)
    if args.horizon < 1:
        raise ConfigError("--horizon must be at least 1")
    if args.start < 0:
        raise ConfigError("--start must be non-negative")
    if args.start + args.horizon > len(sl):
        raise ConfigError(
            f"window [{args.start}, {args.start + args.horizon}) runs past "
            f"the scenario end ({len(sl)} steps)"
        )
    window = sl.window(args.start, args.start + args.horizon)
    schedule = solve_exact(window, tech, storage, PolicyState(X=args.x0, h=args.h0))

    out = Path(args.out) if args.out else cfg.out_dir
    write_schedule_csv(schedule, out / "schedule.csv")
    _write_json(out / "summary.json", _summary_payload(cfg, schedule))
    write_manifest(cfg, "exact", out)
    print(
        f"exact: horizon={args.horizon} profit={schedule.profit:.4f} usd, "
        f"captured={schedule.desorbed:.4f} t"
    )
    return 0


def _cmd_verify(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    schedule = read_schedule_csv(Path(args.schedule))
    tech = cfg.load_tech()
    storage = _storage_from_config(cfg)
    plant = calibrate(make_plant(storage, tech), tech)
    report = simulate_schedule(schedule, plant)

    out = Path(args.out) if args.out else cfg.out_dir
    rows = [
        (
            c.start_step,
            c.steps,
            repr(round(c.heat_up_s, 1)),
            repr(round(c.hold_s, 1)),
            repr(round(c.cool_down_s, 1)),
            repr(round(c.demand_mwh, 6)),
            repr(round(c.delivered_mwh, 6)),
            int(c.feasible),
        )
        for c in report.cycles
    ]
    _write_csv(
        out / "cycles.csv",
        ["start_step", "steps", "heat_up_s", "hold_s", "cool_down_s",
         "demand_mwh", "delivered_mwh", "feasible"],
        rows,
    )
    write_manifest(cfg, "verify", out)
    frac = report.feasible_fraction
    verdict = "PASS" if frac >= args.min_feasible else "FAIL"
    print(
        f"verify: {len(report.cycles)} regeneration runs, "
        f"feasible={frac:.4f} (min {args.min_feasible}) {verdict}"
    )
    return 0 if verdict == "PASS" else 1


def _storage_from_config(cfg: RunConfig) -> StorageParams:
    design = cfg.design_params()
    return StorageParams(
        rated_mwh=design.h_rated,
        target_temp_c=design.t_target,
    )


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    bounds_path = Path(args.bounds)
    if not bounds_path.is_file():
        raise ConfigError(f"bounds file not found: {bounds_path}")
    try:
        axes_raw = json.loads(bounds_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{bounds_path}: invalid JSON ({exc})") from exc
    if not isinstance(axes_raw, dict) or not axes_raw:
        raise ConfigError(f"{bounds_path}: expected an object of axis -> value list")
    axes = {}
    for key, vals in axes_raw.items():
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{bounds_path}: axis {key!r} needs a non-empty list")
        axes[key] = [float(v) for v in vals]

    inputs = build_inputs(cfg)
    result = sweep(
        inputs,
        cfg.load_tech(),
        axes,
        objective=args.objective,
        model=cfg.cost_model(),
        cfg=cfg.threshold_config(),
        jobs=args.jobs,
        ambient=not args.no_ambient,
    )
    out = Path(args.out) if args.out else cfg.out_dir
    rows = [
        (
            r.design.cp, r.design.cr, r.design.t_target, r.design.h_rated,
            r.design.pv_kw, r.design.battery_kwh,
            repr(round(r.lco2, 4)), repr(round(r.net_co2_t, 4)),
            repr(round(r.capacity_factor, 6)), repr(round(r.abatement_per_capex, 6)),
            repr(round(r.profit, 2)), int(i == result.argmin_index),
        )
        for i, r in enumerate(result.rows)
    ]
    _write_csv(
        out / "sweep.csv",
        ["cp", "cr", "t_target", "h_rated", "pv_kw", "battery_kwh",
         "lco2", "net_co2_t", "capacity_factor", "abatement_per_capex",
         "profit", "is_best"],
        rows,
    )
    write_manifest(cfg, "sweep", out)
    b = result.best
    print(
        f"sweep: {len(result.rows)} points, best {args.objective} at "
        f"cp={b.design.cp:g} cr={b.design.cr:g} t={b.design.t_target:g} "
        f"h={b.design.h_rated:g} (lco2={b.lco2:.2f})"
    )
    return 0


def _cmd_incentives(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    pi_values = _parse_float_list(args.pi_grid, "--pi-grid")
    h_axis = _parse_float_list(args.h_grid, "--h-grid") if args.h_grid else None
    inputs = build_inputs(cfg)
    result = incentive_sweep(
        inputs,
        cfg.load_tech(),
        cfg.design_params(),
        pi_values,
        model=cfg.cost_model(),
        cfg=cfg.threshold_config(),
        h_axis=h_axis,
        jobs=args.jobs,
    )
    out = Path(args.out) if args.out else cfg.out_dir
    rows = [
        (
            repr(p.pi), repr(round(p.profit, 2)), repr(round(p.capacity_factor, 6)),
            repr(p.h_rated),
            "" if not np.isfinite(p.payback_years) else repr(round(p.payback_years, 3)),
            "" if not np.isfinite(p.lco2) else repr(round(p.lco2, 4)),
            repr(round(p.net_co2_t, 4)),
        )
        for p in result.points
    ]
    _write_csv(
        out / "incentives.csv",
        ["pi", "profit", "capacity_factor", "h_rated", "payback_years", "lco2", "net_co2_t"],
        rows,
    )
    write_manifest(cfg, "incentives", out)
    print(
        f"incentives: {len(result.points)} levels, "
        f"profit monotone={result.profit_monotone}, cf monotone={result.cf_monotone}"
    )
    return 0


def _cmd_global(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    if float(cfg.design.get("pv_kw", 0.0)) <= 0.0:
        raise ConfigError(
            f"{cfg.source}: site assessment runs stand-alone and needs design.pv_kw > 0"
        )
    grid = apply_masks(load_grid(Path(args.grid)), cf_threshold=args.cf_threshold)
    if not len(grid):
        raise ConfigError(f"{args.grid}: no land sites clear the solar mask")
    results = assess(
        grid,
        cfg.design_params(),
        cfg.load_tech(),
        model=cfg.cost_model(),
        cfg=cfg.threshold_config(),
        pi=cfg.pi,
        jobs=args.jobs,
    )
    out = Path(args.out) if args.out else cfg.out_dir
    write_global_csv(results, out / "global.csv")
    summary = summarize(results)
    _write_json(
        out / "summary.json",
        {
            "count": summary.count,
            "fraction_below": {f"{k:g}": v for k, v in summary.below.items()},
            "best": [dataclasses.asdict(r) for r in summary.best],
            "cf_cost_envelope": list(summary.fit_coeffs),
        },
    )
    write_manifest(cfg, "global", out)
    ok = sum(1 for r in results if r.flag == "ok")
    print(f"global: {len(results)} sites assessed, {ok} ok")
    return 0


def write_global_csv(results: list[LocationResult], path: Path) -> None:
    rows = [
        (
            repr(r.lat), repr(r.lon),
            "" if not np.isfinite(r.lco2) else repr(round(r.lco2, 4)),
            "" if not np.isfinite(r.lco2_ambient) else repr(round(r.lco2_ambient, 4)),
            repr(round(r.cf_mean, 6)), repr(round(r.cf_daily_std, 6)),
            repr(round(r.dac_cf, 6)), r.flag,
        )
        for r in results
    ]
    _write_csv(
        path,
        ["lat", "lon", "lco2", "lco2_ambient", "cf_mean", "cf_daily_std", "dac_cf", "flag"],
        rows,
    )


def read_global_csv(path: Path) -> list[LocationResult]:
    if not Path(path).is_file():
        raise ConfigError(f"results file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["lat", "lon", "lco2", "lco2_ambient", "cf_mean",
                    "cf_daily_std", "dac_cf", "flag"]
        if header != expected:
            raise SchemaError(f"{path}: expected header {','.join(expected)}")
        out = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 8:
                raise SchemaError(f"{path}:{i}: expected 8 fields")
            out.append(
                LocationResult(
                    lat=float(row[0]),
                    lon=float(row[1]),
                    lco2=float(row[2]) if row[2] else float("inf"),
                    lco2_ambient=float(row[3]) if row[3] else float("inf"),
                    cf_mean=float(row[4]),
                    cf_daily_std=float(row[5]),
                    dac_cf=float(row[6]),
                    flag=row[7],
                )
            )
    return out


def _cmd_diff(args) -> int:
    ours = read_global_csv(Path(args.results))
    base_path = Path(args.baseline)
    if not base_path.is_file():
        raise ConfigError(f"baseline file not found: {base_path}")
    with open(base_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3:
            raise SchemaError(f"{base_path}: expected lat,lon,cost columns")
        baseline = [(float(r[0]), float(r[1]), float(r[2])) for r in reader if r]
    points = diff_grid(ours, baseline, tol=args.tol)
    rows = [
        (repr(p.lat), repr(p.lon),
         "" if not np.isfinite(p.diff) else repr(round(p.diff, 4)),
         int(p.matched))
        for p in points
    ]
    _write_csv(Path(args.out), ["lat", "lon", "diff", "matched"], rows)
    matched = sum(1 for p in points if p.matched)
    print(f"diff: {matched}/{len(points)} sites matched against {base_path.name}")
    return 0


def _cmd_summarize(args) -> int:
    results = read_global_csv(Path(args.results))
    thresholds = _parse_float_list(args.thresholds, "--thresholds")
    summary = summarize(results, thresholds=thresholds)
    payload = {
        "count": summary.count,
        "fraction_below": {f"{k:g}": v for k, v in summary.below.items()},
        "best": [dataclasses.asdict(r) for r in summary.best],
        "cf_cost_envelope": list(summary.fit_coeffs),
    }
    if args.out:
        _write_json(Path(args.out), payload)
    for th in thresholds:
        print(f"below {th:g} usd/t: {summary.below[float(th)] * 100.0:.1f}% of sites")
    if summary.best:
        b = summary.best[0]
        print(f"best site: ({b.lat:g}, {b.lon:g}) at {b.lco2_ambient:.1f} usd/t")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if not values:
        raise ConfigError(f"{flag} expects at least one value")
    return values


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "pi", None) is not None:
        out["pi"] = args.pi
    if getattr(args, "rho_e", None) is not None:
        out["rho_e"] = args.rho_e
    if getattr(args, "mode", None) is not None:
        out["mode"] = args.mode
    if getattr(args, "tech", None) is not None:
        out["technology.name"] = args.tech
    for spec in getattr(args, "set", None) or []:
        if "=" not in spec:
            raise ConfigError(f"--set expects dotted.path=value, got {spec!r}")
        dotted, _, raw = spec.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        out[dotted] = value
    return out


def _add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, help="run config JSON")
    p.add_argument("--out", help="output directory (default: config out_dir)")
    p.add_argument("--pi", type=float, help="override carbon incentive, USD/t")
    p.add_argument("--rho-e", dest="rho_e", type=float, help="override carbon price on electricity")
    p.add_argument("--mode", choices=["grid", "standalone"], help="override run mode")
    p.add_argument("--tech", help="override technology name")
    p.add_argument(
        "--set", action="append", metavar="PATH=VALUE",
        help="override any config field by dotted path (repeatable)",
    )
    p.add_argument(
        "--no-ambient", action="store_true",
        help="skip weather corrections even when ambient data is present",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heliodac",
        description="Schedule, verify, and cost solar-thermal direct air capture.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="dispatch a full scenario with the threshold policy")
    _add_common(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("exact", help="exhaustive profit-optimal schedule on a short window")
    _add_common(p)
    p.add_argument("--horizon", type=int, required=True, help="steps to solve (max 16)")
    p.add_argument("--start", type=int, default=0, help="first step of the window")
    p.add_argument("--x0", type=float, default=0.0, help="initial sorbent loading, t")
    p.add_argument("--h0", type=float, default=0.0, help="initial storage level, MWh")
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("verify", help="transient thermal check of a schedule CSV")
    _add_common(p)
    p.add_argument("--schedule", required=True, help="schedule.csv from optimize/exact")
    p.add_argument("--min-feasible", type=float, default=0.99)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("sweep", help="grid search over design parameters")
    _add_common(p)
    p.add_argument("--bounds", required=True, help="JSON of axis -> value list")
    p.add_argument("--objective", default="lco2",
                   choices=["lco2", "abatement_per_capex"])
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("incentives", help="re-dispatch the year across incentive levels")
    _add_common(p)
    p.add_argument("--pi-grid", required=True, help="comma-separated incentives, USD/t")
    p.add_argument("--h-grid", help="optional storage ratings to re-pick per level")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=_cmd_incentives)

    p = sub.add_parser("global", help="assess a fixed design across a site grid")
    _add_common(p)
    p.add_argument("--grid", required=True, help="grid manifest CSV")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument(
        "--cf-threshold", type=float, default=0.15,
        help="mask out sites whose mean solar capacity factor is at or below this",
    )
    p.set_defaults(func=_cmd_global)

    p = sub.add_parser("diff", help="difference site results against an external cost grid")
    p.add_argument("--results", required=True, help="global.csv from a global run")
    p.add_argument("--baseline", required=True, help="CSV of lat,lon,cost")
    p.add_argument("--out", default="diff.csv")
    p.add_argument("--tol", type=float, default=1e-6, help="coordinate match tolerance")
    p.set_defaults(func=_cmd_diff)

    p = sub.add_parser("summarize", help="threshold table and best sites from global.csv")
    p.add_argument("--results", required=True)
    p.add_argument("--out", help="optional summary JSON path")
    p.add_argument("--thresholds", default="140,180,220,300,400")
    p.set_defaults(func=_cmd_summarize)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CalibrationError, EconomicsError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, SchemaError, ExactSolveError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
