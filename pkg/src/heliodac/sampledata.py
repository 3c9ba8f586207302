"""Deterministic synthetic sample data: a Texas-flavored year.

Real market and reanalysis feeds cannot be redistributed, so the bundled
sample is generated: 15-minute wholesale prices with cheap nights and
evening peaks, hourly solar capacity factors with seasonal day length and
cloud spells, hourly weather, and an hourly fuel mix. Everything is seeded
and reproducible byte for byte.

Run `python -m heliodac.sampledata --out DIR` to materialize the files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

SEED = 20230117
START = datetime(2023, 1, 1, tzinfo=timezone.utc)
DAYS_FULL = 365

EMISSION_FACTORS = {
    "gas": 0.45,
    "coal": 0.95,
    "wind": 0.0,
    "solar": 0.0,
    "nuclear": 0.0,
}


def _day_length_h(doy: np.ndarray, lat_deg: float = 31.0) -> np.ndarray:
    """Daylight hours by day of year at the sample latitude."""
    decl = np.radians(23.45) * np.sin(2 * np.pi * (284 + doy) / 365.0)
    lat = math.radians(lat_deg)
    x = np.clip(-np.tan(lat) * np.tan(decl), -1.0, 1.0)
    return 2.0 * np.degrees(np.arccos(x)) / 15.0


def solar_year(days: int = DAYS_FULL, seed: int = SEED) -> np.ndarray:
    """Hourly solar capacity factor in [0, 1]."""
    rng = np.random.default_rng(seed + 1)
    doy = np.arange(days)
    daylen = _day_length_h(doy)
    peak = 0.735 - 0.085 * np.sin(2 * np.pi * (doy - 80) / 365.0)

    # day-scale cloud regimes: clear winters, convective summers
    w_winter = 0.5 * (1.0 - np.sin(2 * np.pi * (doy - 80) / 365.0))
    p_clear = 0.65 + 0.25 * w_winter
    p_hazy = 0.08 - 0.04 * w_winter
    u = rng.random(days)
    regime = np.where(u < p_clear, 0, np.where(u < 1.0 - p_hazy, 1, 2))
    # fronts pass within a day: a storm day is followed by clearing skies
    for d in range(1, days):
        if regime[d] == 2 and regime[d - 1] == 2:
            regime[d] = 0
    cloud = np.where(
        regime == 0,
        rng.uniform(0.93, 1.0, days),
        np.where(regime == 1, rng.uniform(0.65, 0.92, days), rng.uniform(0.32, 0.55, days)),
    )

    out = np.zeros(days * 24)
    hours = np.arange(24) + 0.5
    for d in range(days):
        rise = 12.0 - daylen[d] / 2.0
        up = (hours > rise) & (hours < rise + daylen[d])
        shape = np.zeros(24)
        shape[up] = np.sin(np.pi * (hours[up] - rise) / daylen[d]) ** 1.15
        wobble = 1.0 + 0.07 * rng.standard_normal(24)
        out[d * 24 : (d + 1) * 24] = np.clip(shape * peak[d] * cloud[d] * wobble, 0.0, 1.0)
    return out


def ambient_year(days: int = DAYS_FULL, seed: int = SEED) -> tuple[np.ndarray, np.ndarray]:
    """Hourly temperature (degC) and relative humidity (0..1)."""
    rng = np.random.default_rng(seed + 2)
    doy = np.repeat(np.arange(days), 24)
    hour = np.tile(np.arange(24), days)
    season = 17.0 + 7.0 * np.sin(2 * np.pi * (doy - 105) / 365.0)
    diurnal = 4.5 * np.sin(2 * np.pi * (hour - 9) / 24.0)
    temp = season + diurnal + rng.normal(0.0, 1.5, days * 24)
    rh = 0.45 - 0.008 * (temp - 17.0) + rng.normal(0.0, 0.04, days * 24)
    return temp, np.clip(rh, 0.08, 0.95)


def price_year(days: int = DAYS_FULL, seed: int = SEED) -> np.ndarray:
    """15-minute wholesale price in USD/MWh.

    Nights are cheap, middays moderate (solar-suppressed), evenings peaky;
    summer afternoons add scarcity spikes. Roughly 85 percent of steps sit
    under the mid-60s, which is what makes price-responsive capture pay.
    """
    rng = np.random.default_rng(seed + 3)
    n = days * 96
    doy = np.repeat(np.arange(days), 96)
    tod_h = np.tile(np.arange(96) / 4.0, days)

    base = np.full(n, 24.0)
    base += 12.0 * np.clip(np.sin(np.pi * (tod_h - 6.0) / 12.0), 0.0, None)     # daytime
    evening = np.exp(-0.5 * ((tod_h - 19.0) / 2.3) ** 2)
    summer = np.exp(-0.5 * ((doy - 205.0) / 38.0) ** 2)
    winter = np.exp(-0.5 * ((doy - 15.0) / 25.0) ** 2) + np.exp(
        -0.5 * ((doy - 355.0) / 25.0) ** 2
    )
    base += evening * (51.0 + 30.0 * summer + 18.0 * winter)
    morning = np.exp(-0.5 * ((tod_h - 7.0) / 1.1) ** 2)
    base += morning * 16.0 * winter

    noise = rng.normal(0.0, 3.5, n) + base * 0.08 * rng.standard_normal(n)
    price = base + noise

    # scarcity spikes: a handful of summer evening hours go vertical
    spike_days = rng.choice(np.arange(days), size=min(18, days), replace=False)
    for d in spike_days:
        if summer[d * 96] + winter[d * 96] < 0.15 and rng.random() < 0.5:
            continue
        start = d * 96 + int(rng.uniform(64, 82))
        width = int(rng.uniform(4, 14))
        price[start : start + width] += rng.uniform(150.0, 900.0)

    # rare negative prints on windy spring nights
    neg = rng.random(n) < 0.004
    neg &= (tod_h < 6.0) | (tod_h > 22.0)
    price[neg] -= rng.uniform(20.0, 40.0, int(neg.sum()))
    return np.round(price, 2)


def fuel_mix_year(
    solar_cf: np.ndarray, days: int = DAYS_FULL, seed: int = SEED
) -> dict[str, np.ndarray]:
    """Hourly generation by fuel (MW), loosely shaped like a gas+wind grid."""
    rng = np.random.default_rng(seed + 4)
    n = days * 24
    doy = np.repeat(np.arange(days), 24)
    hour = np.tile(np.arange(24), days)

    demand = 42000.0 + 9000.0 * np.sin(2 * np.pi * (doy - 190) / 365.0) * np.sin(
        np.pi * np.clip((hour - 6) / 16.0, 0.0, 1.0)
    )
    demand += 5000.0 * np.exp(-0.5 * ((hour - 18.5) / 2.5) ** 2)
    demand += rng.normal(0.0, 900.0, n)

    wind_shape = 0.38 + 0.16 * np.cos(2 * np.pi * (hour - 3) / 24.0) + 0.08 * np.sin(
        2 * np.pi * (doy - 60) / 365.0
    )
    wind = 32000.0 * np.clip(wind_shape + 0.18 * rng.standard_normal(n), 0.02, 0.95)
    solar = 16000.0 * solar_cf[:n]
    nuclear = np.full(n, 5100.0)
    coal = np.clip(3600.0 + 700.0 * np.sin(2 * np.pi * (doy - 200) / 365.0), 2500.0, None)
    gas = np.clip(demand - wind - solar - nuclear - coal, 1500.0, None)
    return {"gas": gas, "coal": coal, "wind": wind, "solar": solar, "nuclear": nuclear}


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _stamps(days: int, step_s: int):
    n = days * 86400 // step_s
    dt = timedelta(seconds=step_s)
    return [(START + i * dt).strftime("%Y-%m-%dT%H:%M:%SZ") for i in range(n)]


def write_tx_sample(out_dir: str | Path, days: int = DAYS_FULL) -> dict[str, Path]:
    """Write the Texas-flavored sample set and its run config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    price = price_year(days)
    paths["prices"] = out / "tx_prices.csv"
    _write_csv(
        paths["prices"],
        ["timestamp", "price_usd_per_mwh"],
        zip(_stamps(days, 900), (repr(float(v)) for v in price)),
    )

    solar = solar_year(days)
    paths["solar"] = out / "tx_solar.csv"
    _write_csv(
        paths["solar"],
        ["timestamp", "dni_cf"],
        zip(_stamps(days, 3600), (repr(float(v)) for v in solar)),
    )

    temp, rh = ambient_year(days)
    paths["ambient"] = out / "tx_ambient.csv"
    _write_csv(
        paths["ambient"],
        ["timestamp", "temp_c", "rh"],
        zip(_stamps(days, 3600), (repr(float(v)) for v in temp), (repr(float(v)) for v in rh)),
    )

    mix = fuel_mix_year(solar, days)
    paths["fuelmix"] = out / "tx_fuelmix.csv"
    fuels = list(mix)
    _write_csv(
        paths["fuelmix"],
        ["timestamp"] + [f"{f}_mw" for f in fuels],
        zip(_stamps(days, 3600), *((repr(round(float(v), 1)) for v in mix[f]) for f in fuels)),
    )

    paths["factors"] = out / "emission_factors.json"
    paths["factors"].write_text(json.dumps(EMISSION_FACTORS, indent=2) + "\n")

    config = {
        "schema_version": 1,
        "mode": "grid",
        "pi": 200.0,
        "rho_e": 0.0,
        "technology": {"name": "MOF", "x_max": 5.0, "thermal_mwh_per_ton": 1.8},
        "design": {"cp": 3.0, "cr": 1.0, "t_target": 400.0, "h_rated": 70.0},
        "scenario": {
            "prices": paths["prices"].name,
            "solar": paths["solar"].name,
            "ambient": paths["ambient"].name,
            "fuel_mix": paths["fuelmix"].name,
            "emission_factors": paths["factors"].name,
        },
        "threshold": {"chunk_steps": 288, "lookahead_steps": 288},
        "economics": {},
        "out_dir": "out",
    }
    paths["config"] = out / "config_tx.json"
    paths["config"].write_text(json.dumps(config, indent=2) + "\n")
    return paths


def write_grid_sample(
    out_dir: str | Path, days: int = 14
) -> Path:
    """Write a small location-grid sample for the batch assessor."""
    out = Path(out_dir)
    (out / "grid").mkdir(parents=True, exist_ok=True)
    spots = [
        # lat, lon, solar scale, land
        (31.0, -102.0, 1.00, True),
        (33.5, -106.0, 1.05, True),
        (36.0, -115.0, 0.95, True),
        (28.0, -96.0, 0.80, True),
        (25.0, -90.0, 0.85, False),   # gulf water point, masked off
        (40.0, -110.0, 0.55, True),
    ]
    rows = []
    for i, (lat, lon, scale, land) in enumerate(spots):
        solar = np.clip(solar_year(days, seed=SEED + 10 + i) * scale, 0.0, 1.0)
        temp, rh = ambient_year(days, seed=SEED + 50 + i)
        spath = out / "grid" / f"solar_{i}.csv"
        apath = out / "grid" / f"ambient_{i}.csv"
        _write_csv(
            spath, ["timestamp", "dni_cf"],
            zip(_stamps(days, 3600), (repr(float(v)) for v in solar)),
        )
        _write_csv(
            apath, ["timestamp", "temp_c", "rh"],
            zip(_stamps(days, 3600), (repr(float(v)) for v in temp), (repr(float(v)) for v in rh)),
        )
        rows.append([lat, lon, f"grid/{spath.name}", f"grid/{apath.name}", int(land)])
    manifest = out / "grid_manifest.csv"
    _write_csv(manifest, ["lat", "lon", "solar_path", "ambient_path", "is_land"], rows)

    config = {
        "schema_version": 1,
        "mode": "standalone",
        "pi": 200.0,
        "technology": {"name": "MOF", "x_max": 5.0, "thermal_mwh_per_ton": 1.8},
        "design": {
            "cp": 3.0, "cr": 1.0, "t_target": 400.0, "h_rated": 70.0,
            "pv_kw": 12000.0, "battery_kwh": 36000.0,
        },
        "scenario": {"solar": "grid/solar_0.csv", "ambient": "grid/ambient_0.csv"},
        "threshold": {"chunk_steps": 288, "lookahead_steps": 288},
        "economics": {},
        "out_dir": "out_global",
    }
    (out / "config_global.json").write_text(json.dumps(config, indent=2) + "\n")
    return manifest


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m heliodac.sampledata",
        description="Generate the deterministic sample dataset.",
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--days", type=int, default=DAYS_FULL)
    parser.add_argument("--grid", action="store_true", help="also write the location grid")
    parser.add_argument("--grid-days", type=int, default=14)
    args = parser.parse_args(argv)
    paths = write_tx_sample(args.out, days=args.days)
    if args.grid:
        paths["grid"] = write_grid_sample(args.out, days=args.grid_days)
    for name, p in sorted(paths.items()):
        print(f"{name}: {p}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
