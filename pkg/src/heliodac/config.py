"""Run configuration and output manifests.

One JSON file drives every pipeline command. The schema is versioned, all
paths are resolved relative to the config file, and every output directory
gets a manifest recording the config hash plus a digest of each input file,
so two runs with identical manifests are byte-for-byte reproducible.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .dac import Technology, load_technology
from .design import DesignParams, ScenarioInputs
from .economics import CostModel
from .threshold import ThresholdConfig
from .timeseries import (
    align_to_master,
    carbon_intensity,
    load_ambient,
    load_fuel_mix,
    load_series,
)

SCHEMA_VERSION = 1

_MODES = ("grid", "standalone")

# scenario keys that name input files, in manifest order
_SCENARIO_KEYS = ("prices", "solar", "ambient", "fuel_mix", "emission_factors")


class ConfigError(ValueError):
    """Raised when a run config is missing, malformed, or inconsistent."""


@dataclass
class RunConfig:
    """Validated run configuration with paths resolved."""

    mode: str
    pi: float
    rho_e: float
    technology: dict[str, Any]
    design: dict[str, float]
    scenario: dict[str, Path]
    threshold: dict[str, float]
    economics: dict[str, float]
    out_dir: Path
    source: Path
    raw: dict[str, Any] = field(repr=False)

    def design_params(self) -> DesignParams:
        return DesignParams(**{k: float(v) for k, v in self.design.items()})

    def threshold_config(self) -> ThresholdConfig:
        kwargs: dict[str, Any] = dict(self.threshold)
        for key in ("chunk_steps", "lookahead_steps"):
            if key in kwargs:
                kwargs[key] = int(kwargs[key])
        return ThresholdConfig(**kwargs)

    def cost_model(self) -> CostModel:
        return dataclasses.replace(CostModel(), **self.economics)

    def load_tech(self) -> Technology:
        kwargs = {k: v for k, v in self.technology.items() if k != "name"}
        return load_technology(self.technology["name"], **kwargs)


def _require(raw: dict[str, Any], key: str, kind: type, where: str) -> Any:
    if key not in raw:
        raise ConfigError(f"{where}: missing required field {key!r}")
    value = raw[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{where}: field {key!r} must be {kind.__name__}")
    return value


def apply_overrides(raw: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Merge dotted-path overrides (e.g. 'design.h_rated') into a config dict."""
    out = json.loads(json.dumps(raw))  # deep copy, JSON types only
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = out
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {dotted!r} descends into a non-object")
        node[parts[-1]] = value
    return out


def load_config(
    path: str | Path, overrides: dict[str, Any] | None = None
) -> RunConfig:
    """Parse and validate a run config; errors always name the offending path."""
    src = Path(path)
    if not src.is_file():
        raise ConfigError(f"config file not found: {src}")
    try:
        raw = json.loads(src.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{src}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{src}: top level must be an object")
    if overrides:
        raw = apply_overrides(raw, overrides)

    version = _require(raw, "schema_version", int, str(src))
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"{src}: schema_version {version} unsupported (expected {SCHEMA_VERSION})"
        )
    mode = _require(raw, "mode", str, str(src))
    if mode not in _MODES:
        raise ConfigError(f"{src}: mode must be one of {_MODES}, got {mode!r}")
    pi = _require(raw, "pi", float, str(src))
    rho_e = float(raw.get("rho_e", 0.0))

    tech = _require(raw, "technology", dict, str(src))
    if "name" not in tech:
        raise ConfigError(f"{src}: technology block needs a 'name'")
    for key in tech:
        if key not in ("name", "x_max", "thermal_mwh_per_ton", "path"):
            raise ConfigError(f"{src}: unknown technology field {key!r}")

    design = dict(_require(raw, "design", dict, str(src)))
    scenario_rel = _require(raw, "scenario", dict, str(src))

    base = src.resolve().parent
    scenario: dict[str, Path] = {}
    for key, rel in scenario_rel.items():
        if key not in _SCENARIO_KEYS:
            raise ConfigError(f"{src}: unknown scenario entry {key!r}")
        p = (base / rel).resolve()
        if not p.is_file():
            raise ConfigError(f"{src}: scenario file not found: {p}")
        scenario[key] = p

    if mode == "grid":
        for key in ("prices", "solar"):
            if key not in scenario:
                raise ConfigError(f"{src}: grid mode needs scenario.{key}")
        if ("fuel_mix" in scenario) != ("emission_factors" in scenario):
            raise ConfigError(
                f"{src}: fuel_mix and emission_factors must be given together"
            )
    else:
        if "solar" not in scenario:
            raise ConfigError(f"{src}: standalone mode needs scenario.solar")
        pv = float(design.get("pv_kw", 0.0))
        if pv <= 0.0:
            raise ConfigError(f"{src}: standalone mode needs design.pv_kw > 0")

    threshold = dict(raw.get("threshold", {}))
    economics = dict(raw.get("economics", {}))
    known_costs = {f.name for f in dataclasses.fields(CostModel)}
    for key in economics:
        if key not in known_costs:
            raise ConfigError(f"{src}: unknown economics field {key!r}")

    out_dir = Path(raw.get("out_dir", "out"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir

    cfg = RunConfig(
        mode=mode,
        pi=pi,
        rho_e=rho_e,
        technology=tech,
        design=design,
        scenario=scenario,
        threshold=threshold,
        economics=economics,
        out_dir=out_dir,
        source=src.resolve(),
        raw=raw,
    )
    # fail fast on bad numeric blocks rather than mid-pipeline
    try:
        cfg.design_params()
        cfg.threshold_config()
        cfg.cost_model()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{src}: {exc}") from exc
    return cfg


def build_inputs(cfg: RunConfig) -> ScenarioInputs:
    """Load scenario files and align them on the 5-minute master grid."""
    solar = align_to_master(load_series(cfg.scenario["solar"]))
    n = len(solar)

    if cfg.mode == "grid":
        prices = align_to_master(load_series(cfg.scenario["prices"]))
        n = min(n, len(prices))
        price_values = prices.values
    else:
        price_values = np.zeros(n)

    if "fuel_mix" in cfg.scenario:
        mix = load_fuel_mix(cfg.scenario["fuel_mix"], cfg.scenario["emission_factors"])
        ci = align_to_master(carbon_intensity(mix))
        n = min(n, len(ci))
        ci_values = ci.values
    else:
        ci_values = np.zeros(n)

    temp = rh = None
    if "ambient" in cfg.scenario:
        amb = load_ambient(cfg.scenario["ambient"])
        factor = amb.step_seconds // 300
        temp = np.repeat(amb.temp_c, factor)
        rh = np.repeat(amb.rh, factor)
        n = min(n, len(temp))
        temp, rh = temp[:n], rh[:n]

    return ScenarioInputs(
        prices=np.asarray(price_values[:n], dtype=float),
        carbon_intensity=np.asarray(ci_values[:n], dtype=float),
        dni=solar.values[:n],
        pi=cfg.pi,
        temp_c=temp,
        rh=rh,
        rho_e=cfg.rho_e,
        mode=cfg.mode,
    )


# ---------------------------------------------------------------------------
# manifests


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def config_hash(raw: dict[str, Any]) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def build_manifest(cfg: RunConfig, command: str) -> dict[str, Any]:
    inputs = {
        key: {"path": str(cfg.scenario[key]), "sha256": file_sha256(cfg.scenario[key])}
        for key in _SCENARIO_KEYS
        if key in cfg.scenario
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config_hash": config_hash(cfg.raw),
        "inputs": inputs,
    }


def write_manifest(cfg: RunConfig, command: str, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(build_manifest(cfg, command), indent=2) + "\n")
    return path
