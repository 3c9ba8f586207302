"""Concentrating solar-thermal collection and sand storage sizing.

The collector model is an empirical fit of receiver efficiency against
normalized direct normal irradiance, receiver temperature and
concentration ratio; the fit loses efficiency quadratically with
temperature and hyperbolically as irradiance drops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# fitted collector coefficients
ETA_OPTICAL = 0.78        # zero-loss intercept
ALPHA_TEMP = 8.8e-7       # 1/degC^2, temperature loss scale
BETA_DNI = 1.1            # irradiance shape factor
M_DNI = 0.1               # keeps the irradiance term finite at dni = 0
GAMMA_CONC = 1.0          # concentration shape factor

T_STORE_MIN_C = 300.0     # sand below this cannot regenerate sorbent
T_STORE_UNIT_C = 100.0    # rated capacity is quoted per 100 degC of swing


@dataclass(frozen=True)
class CollectorParams:
    """Collector field design: capacity is MWh of heat per master step at dni = 1."""

    capacity_mwh_per_step: float = 3.0
    concentration_ratio: float = 1.0
    receiver_temp_c: float = 400.0
    charge_efficiency: float = 0.95

    def __post_init__(self) -> None:
        if self.capacity_mwh_per_step < 0:
            raise ValueError("collector capacity must be non-negative")
        if self.concentration_ratio <= 0:
            raise ValueError("concentration ratio must be positive")
        if not 0 < self.charge_efficiency <= 1:
            raise ValueError("charge efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class StorageParams:
    """Sand thermal store: rated MWh per 100 degC swing plus retention."""

    rated_mwh: float = 70.0
    retention_per_step: float = 0.99986
    target_temp_c: float = 400.0

    def __post_init__(self) -> None:
        if self.rated_mwh < 0:
            raise ValueError("rated storage must be non-negative")
        if not 0 < self.retention_per_step <= 1:
            raise ValueError("retention must lie in (0, 1]")


def collector_efficiency(dni_cf, concentration_ratio: float, receiver_temp_c: float):
    """Receiver efficiency for normalized irradiance in [0, 1], clipped at zero.

    Scalar in, scalar out; arrays broadcast elementwise.
    """
    dni = np.asarray(dni_cf, dtype=float)
    if np.any(dni < 0) or np.any(dni > 1):
        raise ValueError("dni_cf must lie in [0, 1]")
    if concentration_ratio <= 0:
        raise ValueError("concentration ratio must be positive")
    loss = (
        ALPHA_TEMP
        * receiver_temp_c**2
        * (BETA_DNI / (dni + M_DNI))
        * (GAMMA_CONC / concentration_ratio)
    )
    eta = np.maximum(0.0, ETA_OPTICAL - loss)
    return float(eta) if np.isscalar(dni_cf) else eta


def thermal_flux(dni_cf, collector: CollectorParams):
    """Heat delivered into storage per master step, MWh."""
    eta = collector_efficiency(
        dni_cf, collector.concentration_ratio, collector.receiver_temp_c
    )
    flux = (
        np.asarray(dni_cf, dtype=float)
        * collector.capacity_mwh_per_step
        * np.asarray(eta)
        * collector.charge_efficiency
    )
    return float(flux) if np.isscalar(dni_cf) else flux


def effective_capacity(storage: StorageParams, target_temp_c: float | None = None) -> float:
    """Usable MWh between the 300 degC regeneration floor and the target temp."""
    t_target = storage.target_temp_c if target_temp_c is None else target_temp_c
    if t_target < T_STORE_MIN_C:
        raise ValueError(
            f"storage target {t_target} degC is below the {T_STORE_MIN_C} degC floor"
        )
    return storage.rated_mwh * (t_target - T_STORE_MIN_C) / T_STORE_UNIT_C
