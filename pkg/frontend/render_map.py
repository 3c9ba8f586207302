#!/usr/bin/env python3
"""Render heliodac CSV artifacts as PNG plots.

The scheduler CLI emits plain CSV (global site grids, design sweeps,
hourly operation profiles). This tool turns those files into images and
knows nothing about the producing package beyond the CSV schemas:

  map      global.csv         lat/lon points colored by LCO2
  sweep    sweep.csv          objective vs the swept design parameter
  profile  hourly_profile.csv mean operation by hour of day

The kind is detected from the header and can be forced with --kind.
`--dump-binned PATH` writes the exact data behind the plot back out as
CSV, so plots can be audited without reverse-engineering pixels.

Exit codes: 0 ok, 1 I/O failure, 2 bad arguments or malformed input.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCHEMAS = {
    "map": [
        "lat", "lon", "lco2", "lco2_ambient",
        "cf_mean", "cf_daily_std", "dac_cf", "flag",
    ],
    "sweep": [
        "cp", "cr", "t_target", "h_rated", "pv_kw", "battery_kwh",
        "lco2", "net_co2_t", "capacity_factor", "abatement_per_capex",
        "profit", "is_best",
    ],
    "profile": [
        "hour", "adsorb_frac", "desorb_frac", "idle_frac",
        "co2_mean_t", "storage_mean_mwh",
    ],
}

DESIGN_AXES = ["cp", "cr", "t_target", "h_rated", "pv_kw", "battery_kwh"]

# Keys with no Software entry would leave matplotlib's version string in
# the file; pin it to nothing so repeated renders are byte-identical.
PNG_METADATA = {"Software": None}


class InputError(Exception):
    """Malformed input: bad schema, empty data, unusable flag values."""


@dataclass(frozen=True)
class RenderJob:
    in_path: Path
    out_path: Path
    kind: str
    value: str | None = None
    vmin: float | None = None
    vmax: float | None = None
    bin_width: float | None = None
    dump_binned: Path | None = None

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise InputError(f"unknown kind {self.kind!r}")
        for name in ("vmin", "vmax"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise InputError(f"--{name} must be finite")
        if self.vmin is not None and self.vmax is not None and self.vmin >= self.vmax:
            raise InputError("--vmin must be below --vmax")
        if self.bin_width is not None and self.bin_width <= 0:
            raise InputError("--bin must be positive")


def read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: file is empty, no header row")
    return rows[0], rows[1:]


def detect_kind(header: list[str]) -> str:
    for kind, schema in SCHEMAS.items():
        if header == schema:
            return kind
    raise InputError(f"unrecognized header, pass --kind explicitly: {','.join(header)}")


def check_schema(path: Path, header: list[str], kind: str) -> None:
    want = SCHEMAS[kind]
    if header == want:
        return
    missing = [c for c in want if c not in header]
    extra = [c for c in header if c not in want]
    parts = [f"{path}: header does not match the {kind} schema"]
    if missing:
        parts.append(f"missing columns: {','.join(missing)}")
    if extra:
        parts.append(f"unexpected columns: {','.join(extra)}")
    raise InputError("; ".join(parts))


def column(header: list[str], rows: list[list[str]], name: str) -> np.ndarray:
    """Numeric column; blank cells (unreported values) become NaN."""
    i = header.index(name)
    return np.array([float(r[i]) if r[i] != "" else np.nan for r in rows])


def infer_bin_width(coords: np.ndarray) -> float:
    """Native grid pitch: the smallest positive gap between sorted
    unique coordinates, 1 degree when everything coincides."""
    u = np.unique(coords)
    if len(u) < 2:
        return 1.0
    return float(np.min(np.diff(u)))


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def bin_map(
    lat: np.ndarray, lon: np.ndarray, val: np.ndarray, width: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Average values over a regular lat/lon grid of the given pitch.

    Returns (lat_center, lon_center, mean value, count) per occupied
    cell, sorted by (lat, lon). With one point per cell this is the
    identity on values, which keeps --dump-binned auditable."""
    key_lat = np.round(lat / width).astype(int)
    key_lon = np.round(lon / width).astype(int)
    cells: dict[tuple[int, int], list[float]] = {}
    for ky, kx, v in zip(key_lat, key_lon, val):
        cells.setdefault((ky, kx), []).append(v)
    keys = sorted(cells)
    c_lat = np.array([k[0] * width for k in keys])
    c_lon = np.array([k[1] * width for k in keys])
    mean = np.array([float(np.mean(cells[k])) for k in keys])
    count = np.array([len(cells[k]) for k in keys])
    return c_lat, c_lon, mean, count


def _save(fig, job: RenderJob) -> None:
    fig.savefig(job.out_path, metadata=PNG_METADATA)
    plt.close(fig)


def render_map(job: RenderJob, header: list[str], rows: list[list[str]]) -> None:
    value = job.value or "lco2_ambient"
    if value not in header or value in ("lat", "lon", "flag"):
        raise InputError(f"map kind cannot color by column {value!r}")
    lat = column(header, rows, "lat")
    lon = column(header, rows, "lon")
    val = column(header, rows, value)
    good = np.isfinite(val)
    if not np.any(good):
        raise InputError(f"no usable rows: column {value!r} is empty everywhere")

    width = job.bin_width or infer_bin_width(np.concatenate([lat[good], lon[good]]))
    b_lat, b_lon, b_val, b_n = bin_map(lat[good], lon[good], val[good], width)
    if job.dump_binned:
        write_csv(
            job.dump_binned,
            ["lat", "lon", value, "count"],
            [
                (repr(float(a)), repr(float(o)), repr(float(v)), int(n))
                for a, o, v, n in zip(b_lat, b_lon, b_val, b_n)
            ],
        )

    fig, ax = plt.subplots(figsize=(10, 5), dpi=100)
    if np.any(~good):
        ax.scatter(lon[~good], lat[~good], s=18, c="0.8", marker="x", label="no result")
        ax.legend(loc="lower left", fontsize=8)
    pts = ax.scatter(
        b_lon, b_lat, s=36, c=b_val, cmap="viridis",
        vmin=job.vmin, vmax=job.vmax, edgecolors="none",
    )
    ax.set_aspect("equal")  # equirectangular: one degree is one degree
    pad = width
    ax.set_xlim(b_lon.min() - pad, b_lon.max() + pad)
    ax.set_ylim(b_lat.min() - pad, b_lat.max() + pad)
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    ax.set_title(f"{value} by site")
    fig.colorbar(pts, ax=ax, label=f"{value} (USD/t)")
    _save(fig, job)


def render_sweep(job: RenderJob, header: list[str], rows: list[list[str]]) -> None:
    value = job.value or "lco2"
    if value not in header or value in DESIGN_AXES or value == "is_best":
        raise InputError(f"sweep kind cannot plot column {value!r}")
    axes = {a: column(header, rows, a) for a in DESIGN_AXES}
    varying = [a for a in DESIGN_AXES if len(np.unique(axes[a])) > 1]
    x_axis = varying[0] if varying else DESIGN_AXES[0]
    x = axes[x_axis]
    y = column(header, rows, value)
    best = column(header, rows, "is_best").astype(bool)
    if job.dump_binned:
        write_csv(
            job.dump_binned,
            [x_axis, value, "is_best"],
            [(repr(float(a)), repr(float(b)), int(c)) for a, b, c in zip(x, y, best)],
        )

    fig, ax = plt.subplots(figsize=(10, 5), dpi=100)
    others = varying[1:]
    if others:
        # One line per combination of the remaining swept parameters.
        combos = sorted({tuple(axes[a][i] for a in others) for i in range(len(rows))})
        for combo in combos:
            m = np.all([axes[a] == v for a, v in zip(others, combo)], axis=0)
            order = np.argsort(x[m])
            label = " ".join(f"{a}={v:g}" for a, v in zip(others, combo))
            ax.plot(x[m][order], y[m][order], marker="o", label=label)
        ax.legend(fontsize=8)
    else:
        order = np.argsort(x)
        ax.plot(x[order], y[order], marker="o")
    if np.any(best & np.isfinite(y)):
        ax.plot(x[best], y[best], marker="*", ms=16, ls="none", c="crimson")
    if job.vmin is not None or job.vmax is not None:
        ax.set_ylim(job.vmin, job.vmax)
    ax.set_xlabel(x_axis)
    ax.set_ylabel(value)
    ax.set_title(f"{value} vs {x_axis}")
    _save(fig, job)


def render_profile(job: RenderJob, header: list[str], rows: list[list[str]]) -> None:
    hour = column(header, rows, "hour")
    fracs = {n: column(header, rows, n) for n in ("adsorb_frac", "desorb_frac", "idle_frac")}
    store = column(header, rows, "storage_mean_mwh")
    if job.dump_binned:
        write_csv(job.dump_binned, header, rows)

    fig, ax = plt.subplots(figsize=(10, 5), dpi=100)
    for name, series in fracs.items():
        ax.plot(hour, series, marker="o", label=name.replace("_frac", ""))
    ax.set_xlabel("hour of day")
    ax.set_ylabel("fraction of steps")
    ax.set_ylim(0, 1)
    ax2 = ax.twinx()
    ax2.plot(hour, store, c="0.4", ls="--", label="heat store")
    ax2.set_ylabel("stored heat (MWh)")
    ax.legend(loc="upper left", fontsize=8)
    ax2.legend(loc="upper right", fontsize=8)
    ax.set_title("mean operation by hour of day")
    _save(fig, job)


RENDERERS = {"map": render_map, "sweep": render_sweep, "profile": render_profile}


def render(job: RenderJob) -> None:
    header, rows = read_table(job.in_path)
    check_schema(job.in_path, header, job.kind)
    if not rows:
        raise InputError(f"{job.in_path}: no data rows")
    RENDERERS[job.kind](job, header, rows)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="render_map.py",
        description="render scheduler CSV outputs (site maps, sweeps, profiles) as PNGs",
    )
    p.add_argument("--in", dest="in_path", required=True, help="input CSV")
    p.add_argument("--out", required=True, help="output PNG path")
    p.add_argument(
        "--kind", choices=sorted(SCHEMAS),
        help="plot kind; default: detect from the CSV header",
    )
    p.add_argument("--value", help="column to plot (default: lco2_ambient map, lco2 sweep)")
    p.add_argument("--vmin", type=float, help="lower color/axis bound")
    p.add_argument("--vmax", type=float, help="upper color/axis bound")
    p.add_argument("--bin", type=float, dest="bin_width", help="map cell size in degrees")
    p.add_argument("--dump-binned", help="also write the plotted data to this CSV")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    in_path = Path(args.in_path)
    try:
        header, _ = read_table(in_path)
        kind = args.kind or detect_kind(header)
        job = RenderJob(
            in_path=in_path,
            out_path=Path(args.out),
            kind=kind,
            value=args.value,
            vmin=args.vmin,
            vmax=args.vmax,
            bin_width=args.bin_width,
            dump_binned=Path(args.dump_binned) if args.dump_binned else None,
        )
        render(job)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
