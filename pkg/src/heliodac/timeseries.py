"""Loading, alignment and masking of the plant input time series.

Everything downstream runs on a single master time step (default 300 s).
Series recorded on a coarser grid are aligned by plain repetition, so a
15-minute price tape becomes three identical 5-minute entries and sums,
means and step counts stay consistent across resolutions.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

MASTER_STEP_SECONDS = 300

# column layouts accepted by load_series, keyed by the value column name
SERIES_COLUMNS = {
    "price_usd_per_mwh": "price",
    "dni_cf": "solar",
}


class SchemaError(ValueError):
    """Raised when an input file does not match its declared layout."""


def _parse_utc(stamp: str, path: str, line: int) -> datetime:
    try:
        ts = datetime.fromisoformat(stamp.replace("Z", "+00:00"))
    except ValueError as exc:
        raise SchemaError(f"{path}:{line}: bad timestamp {stamp!r}") from exc
    if ts.tzinfo is None:
        raise SchemaError(f"{path}:{line}: timestamp {stamp!r} lacks a UTC offset")
    return ts.astimezone(timezone.utc)


@dataclass
class TimeSeries:
    """A uniformly spaced series of one scalar quantity."""

    start: datetime
    step_seconds: int
    values: np.ndarray
    name: str = "value"

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("time series values must be one-dimensional")
        if self.step_seconds <= 0:
            raise ValueError("step_seconds must be positive")

    def __len__(self) -> int:
        return len(self.values)

    def timestamps(self) -> list[datetime]:
        dt = timedelta(seconds=self.step_seconds)
        return [self.start + i * dt for i in range(len(self.values))]


@dataclass
class AmbientSeries:
    """Paired temperature (degC) and relative humidity (0..1) series."""

    start: datetime
    step_seconds: int
    temp_c: np.ndarray
    rh: np.ndarray

    def __post_init__(self) -> None:
        self.temp_c = np.asarray(self.temp_c, dtype=float)
        self.rh = np.asarray(self.rh, dtype=float)
        if self.temp_c.shape != self.rh.shape:
            raise ValueError("temperature and humidity must have equal length")

    def __len__(self) -> int:
        return len(self.temp_c)


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    return [h.strip() for h in header], rows


def _infer_step(stamps: list[datetime], path: str) -> int:
    if len(stamps) < 2:
        return MASTER_STEP_SECONDS
    deltas = {
        round((b - a).total_seconds()) for a, b in zip(stamps, stamps[1:])
    }
    if len(deltas) != 1:
        raise SchemaError(f"{path}: timestamps are not uniformly spaced")
    step = deltas.pop()
    if step <= 0:
        raise SchemaError(f"{path}: timestamps are not increasing")
    return int(step)


def load_series(path: str | Path, fill_missing: bool = False) -> TimeSeries:
    """Load a timestamped single-column CSV (price or solar layout).

    Missing values are linearly interpolated when fill_missing is set,
    otherwise the offending line is reported and loading fails.
    """
    header, rows = _read_rows(path)
    if len(header) != 2 or header[0] != "timestamp":
        raise SchemaError(f"{path}: expected header timestamp,<value>, got {header}")
    value_col = header[1]
    if value_col not in SERIES_COLUMNS:
        raise SchemaError(f"{path}: unknown value column {value_col!r}")

    stamps: list[datetime] = []
    values: list[float] = []
    for i, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise SchemaError(f"{path}:{i}: expected 2 fields, got {len(row)}")
        stamps.append(_parse_utc(row[0], str(path), i))
        raw = row[1].strip()
        if raw == "" or raw.lower() == "nan":
            if not fill_missing:
                raise SchemaError(f"{path}:{i}: missing value (pass fill_missing to interpolate)")
            values.append(math.nan)
        else:
            try:
                values.append(float(raw))
            except ValueError:
                raise SchemaError(f"{path}:{i}: non-numeric value {raw!r}") from None
    if not stamps:
        raise SchemaError(f"{path}: no data rows")

    arr = np.array(values, dtype=float)
    if fill_missing:
        arr = fill_missing_linear(arr)
    series = TimeSeries(stamps[0], _infer_step(stamps, str(path)), arr, name=value_col)
    if value_col == "dni_cf" and (np.any(arr < 0) or np.any(arr > 1)):
        raise SchemaError(f"{path}: dni_cf values must lie in [0, 1]")
    return series


def load_ambient(path: str | Path, fill_missing: bool = False) -> AmbientSeries:
    """Load an ambient CSV with columns timestamp,temp_c,rh."""
    header, rows = _read_rows(path)
    if header != ["timestamp", "temp_c", "rh"]:
        raise SchemaError(f"{path}: expected header timestamp,temp_c,rh, got {header}")
    stamps: list[datetime] = []
    cols: list[list[float]] = [[], []]
    for i, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise SchemaError(f"{path}:{i}: expected 3 fields, got {len(row)}")
        stamps.append(_parse_utc(row[0], str(path), i))
        for j, raw in enumerate(row[1:]):
            raw = raw.strip()
            if raw == "" or raw.lower() == "nan":
                if not fill_missing:
                    raise SchemaError(f"{path}:{i}: missing value")
                cols[j].append(math.nan)
            else:
                cols[j].append(float(raw))
    if not stamps:
        raise SchemaError(f"{path}: no data rows")
    temp = np.array(cols[0])
    rh = np.array(cols[1])
    if fill_missing:
        temp = fill_missing_linear(temp)
        rh = fill_missing_linear(rh)
    if np.any(rh < 0) or np.any(rh > 1):
        raise SchemaError(f"{path}: rh values must lie in [0, 1]")
    return AmbientSeries(stamps[0], _infer_step(stamps, str(path)), temp, rh)


def write_series(series: TimeSeries, path: str | Path) -> None:
    """Write a series back out so that a reload is bit-exact."""
    dt = timedelta(seconds=series.step_seconds)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", series.name])
        for i, v in enumerate(series.values):
            stamp = (series.start + i * dt).strftime("%Y-%m-%dT%H:%M:%SZ")
            writer.writerow([stamp, repr(float(v))])


def fill_missing_linear(values: np.ndarray) -> np.ndarray:
    """Interpolate interior NaN runs linearly; hold nearest value at the edges."""
    values = np.asarray(values, dtype=float)
    bad = np.isnan(values)
    if not bad.any():
        return values.copy()
    if bad.all():
        raise ValueError("cannot fill a series with no finite values")
    idx = np.arange(len(values))
    out = values.copy()
    out[bad] = np.interp(idx[bad], idx[~bad], values[~bad])
    return out


def resample_repeat(series: TimeSeries, factor: int) -> TimeSeries:
    """Repeat each sample `factor` times onto a grid factor times finer."""
    if factor < 1 or int(factor) != factor:
        raise ValueError(f"repeat factor must be a positive integer, got {factor}")
    step, rem = divmod(series.step_seconds, int(factor))
    if rem:
        raise ValueError(
            f"step of {series.step_seconds}s does not divide into {factor} parts"
        )
    return TimeSeries(
        series.start, step, np.repeat(series.values, int(factor)), name=series.name
    )


def align_to_master(series: TimeSeries, master_seconds: int = MASTER_STEP_SECONDS) -> TimeSeries:
    """Bring a series onto the master step by repetition."""
    if series.step_seconds == master_seconds:
        return series
    if series.step_seconds % master_seconds:
        raise ValueError(
            f"series step {series.step_seconds}s is not a multiple of the "
            f"{master_seconds}s master step"
        )
    return resample_repeat(series, series.step_seconds // master_seconds)


# ---------------------------------------------------------------------------
# fuel mix and carbon intensity


@dataclass
class FuelMixTable:
    """Per-fuel generation (MW) on a uniform grid plus emission factors."""

    start: datetime
    step_seconds: int
    fuels: list[str]
    generation_mw: np.ndarray     # shape (steps, fuels)
    emission_factors: dict[str, float]  # tCO2 per MWh by fuel

    def __post_init__(self) -> None:
        self.generation_mw = np.asarray(self.generation_mw, dtype=float)
        missing = [f for f in self.fuels if f not in self.emission_factors]
        if missing:
            raise SchemaError(f"no emission factor for fuels: {missing}")


def load_fuel_mix(mix_path: str | Path, factors_path: str | Path) -> FuelMixTable:
    """Load a fuel-mix CSV (timestamp,<fuel>_mw,...) and a JSON factor map."""
    header, rows = _read_rows(mix_path)
    if not header or header[0] != "timestamp":
        raise SchemaError(f"{mix_path}: first column must be timestamp")
    fuels = []
    for col in header[1:]:
        if not col.endswith("_mw"):
            raise SchemaError(f"{mix_path}: fuel column {col!r} must end in _mw")
        fuels.append(col[:-3])
    with open(factors_path) as fh:
        factors = json.load(fh)
    if not isinstance(factors, dict):
        raise SchemaError(f"{factors_path}: expected a fuel -> tCO2/MWh object")

    stamps = []
    gen = []
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise SchemaError(f"{mix_path}:{i}: expected {len(header)} fields")
        stamps.append(_parse_utc(row[0], str(mix_path), i))
        try:
            gen.append([float(v) for v in row[1:]])
        except ValueError:
            raise SchemaError(f"{mix_path}:{i}: non-numeric generation value") from None
    if not stamps:
        raise SchemaError(f"{mix_path}: no data rows")
    return FuelMixTable(
        stamps[0],
        _infer_step(stamps, str(mix_path)),
        fuels,
        np.array(gen),
        {k: float(v) for k, v in factors.items()},
    )


def carbon_intensity(mix: FuelMixTable) -> TimeSeries:
    """Demand-weighted emission factor, tCO2/MWh, per step.

    Steps with zero total generation get NaN rather than a made-up number.
    """
    ef = np.array([mix.emission_factors[f] for f in mix.fuels])
    total = mix.generation_mw.sum(axis=1)
    weighted = mix.generation_mw @ ef
    out = np.full(len(total), np.nan)
    nz = total > 0
    out[nz] = weighted[nz] / total[nz]
    return TimeSeries(mix.start, mix.step_seconds, out, name="tco2_per_mwh")


# ---------------------------------------------------------------------------
# location grids for the deployment assessment


@dataclass(frozen=True)
class GridPoint:
    lat: float
    lon: float
    solar_path: str
    ambient_path: str
    is_land: bool


@dataclass
class LocationGrid:
    points: list[GridPoint]
    base_dir: Path = field(default_factory=Path)

    def __len__(self) -> int:
        return len(self.points)

    def resolve(self, rel: str) -> Path:
        return (self.base_dir / rel).resolve()


def load_grid(path: str | Path) -> LocationGrid:
    """Load a grid manifest CSV: lat,lon,solar_path,ambient_path,is_land."""
    header, rows = _read_rows(path)
    expected = ["lat", "lon", "solar_path", "ambient_path", "is_land"]
    if header != expected:
        raise SchemaError(f"{path}: expected header {','.join(expected)}")
    points = []
    for i, row in enumerate(rows, start=2):
        if len(row) != 5:
            raise SchemaError(f"{path}:{i}: expected 5 fields")
        flag = row[4].strip().lower()
        if flag not in {"0", "1", "true", "false"}:
            raise SchemaError(f"{path}:{i}: is_land must be 0/1/true/false")
        points.append(
            GridPoint(
                lat=float(row[0]),
                lon=float(row[1]),
                solar_path=row[2].strip(),
                ambient_path=row[3].strip(),
                is_land=flag in {"1", "true"},
            )
        )
    return LocationGrid(points, base_dir=Path(path).resolve().parent)


def apply_masks(grid: LocationGrid, cf_threshold: float = 0.15) -> LocationGrid:
    """Keep land points whose annual mean solar capacity factor clears the bar.

    Applying the same mask twice returns the same set.
    """
    kept = []
    for pt in grid.points:
        if not pt.is_land:
            continue
        solar = load_series(grid.resolve(pt.solar_path))
        if float(np.mean(solar.values)) > cf_threshold:
            kept.append(pt)
    return LocationGrid(kept, base_dir=grid.base_dir)
