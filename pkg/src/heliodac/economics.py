"""Capital cost models, annualization, levelized cost of CO2, payback.

Unit capital costs are not first-principles numbers: they are calibrated
once so the bundled sample reproduces the published cost decomposition,
and they live in the config so users can replace them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .dac import STEP_SECONDS, Technology
from .policy import Schedule

if TYPE_CHECKING:
    from .design import DesignParams

KWH_PER_MWH = 1000.0
DAC_MODULE_T_PER_YEAR = 6000.0
STEPS_PER_YEAR = 365 * 86400 // STEP_SECONDS


class EconomicsError(ValueError):
    """Cost evaluation asked for an undefined quantity."""


@dataclass(frozen=True)
class CostModel:
    """Unit costs and financial assumptions.

    unit_capex_cst is USD per MWh/step of collector capacity at cr=1;
    unit_capex_storage is USD per kWh of sand store; unit_capex_dac is USD
    per t/yr of nameplate capture; PV and battery units serve stand-alone
    mode. Values are calibrated against the bundled sample, not cited.
    """

    unit_capex_cst: float = 3.38e6
    unit_capex_storage: float = 20.0
    unit_capex_dac: float = 630.0
    unit_capex_pv: float = 800.0
    unit_capex_battery: float = 150.0
    sorbent_om_per_cycle: float = 254.0
    discount_rate: float = 0.07
    lifetime_years: int = 20
    scaling_discount: float = 0.15

    def __post_init__(self) -> None:
        units = (
            self.unit_capex_cst, self.unit_capex_storage, self.unit_capex_dac,
            self.unit_capex_pv, self.unit_capex_battery, self.sorbent_om_per_cycle,
        )
        if any(u < 0 for u in units):
            raise ValueError("unit costs must be non-negative")
        if not 0 <= self.discount_rate < 1:
            raise ValueError("discount rate must lie in [0, 1)")
        if self.lifetime_years < 1:
            raise ValueError("lifetime must be at least one year")
        if not 0 <= self.scaling_discount < 1:
            raise ValueError("scaling discount must lie in [0, 1)")


@dataclass(frozen=True)
class CostBreakdown:
    """Annualized cost components and the headline metrics."""

    dac_capex: float
    sorbent_om: float
    electricity: float
    thermal: float
    net_co2_t: float
    lco2: float
    payback_years: float
    capture_efficiency: float

    @property
    def total_annual(self) -> float:
        return self.dac_capex + self.sorbent_om + self.electricity + self.thermal

    @property
    def shares(self) -> dict[str, float]:
        total = self.total_annual
        if total <= 0:
            raise EconomicsError("no costs to decompose")
        return {
            "dac_capex": self.dac_capex / total,
            "sorbent_om": self.sorbent_om / total,
            "electricity": self.electricity / total,
            "thermal": self.thermal / total,
        }


def capex_solar(cp: float, cr: float, h_rated_mwh: float, model: CostModel) -> float:
    """Collector cost with a learning discount per doubling, plus storage."""
    if cp <= 0:
        raise ValueError("collector capacity must be positive")
    if cr < 1:
        raise ValueError("concentration ratio must be at least 1")
    size = cp * cr
    learn = (1.0 - model.scaling_discount) ** math.log2(size)
    return model.unit_capex_cst * size * learn + model.unit_capex_storage * h_rated_mwh * KWH_PER_MWH


def capex_dac(tech: Technology, model: CostModel) -> float:
    """Nameplate DAC cost, discounted per doubling beyond the base module."""
    annual_t = tech.X_max * 8760.0 / tech.cycle_hours
    doublings = max(0.0, math.log2(annual_t / DAC_MODULE_T_PER_YEAR))
    learn = (1.0 - model.scaling_discount) ** doublings
    return model.unit_capex_dac * annual_t * learn


def annualize(capex: float, rate: float, years: int) -> float:
    """Capital recovery: constant annuity covering capex over the lifetime."""
    if years < 1:
        raise ValueError("annualization needs at least one year")
    if rate == 0:
        return capex / years
    growth = (1.0 + rate) ** years
    return capex * rate * growth / (growth - 1.0)


def capture_efficiency(captured_t: float, emitted_t: float) -> float:
    """Fraction of captured CO2 that is a true removal."""
    if captured_t <= 0:
        raise EconomicsError("capture efficiency undefined without captured CO2")
    return 1.0 - emitted_t / captured_t


def payback_years(capex: float, annual_profit: float) -> float:
    if annual_profit <= 0:
        return math.inf
    return capex / annual_profit


def total_capex(
    design: "DesignParams", model: CostModel, tech: Technology, mode: str
) -> float:
    """All capital spent up front, before annualization."""
    capex = capex_solar(design.cp, design.cr, design.h_rated, model) + capex_dac(tech, model)
    if mode == "standalone":
        capex += design.pv_kw * model.unit_capex_pv
        capex += design.battery_kwh * model.unit_capex_battery
    return capex


def lco2(
    schedule: Schedule,
    design: "DesignParams",
    model: CostModel,
    mode: str,
    tech: Technology,
    rho_e: float = 0.0,
) -> CostBreakdown:
    """Levelized cost per net ton over one simulated year.

    Grid mode pays for electricity at market price and owns the grid's
    emissions; stand-alone mode swaps the electricity bill for PV and
    battery capital and emits nothing.
    """
    if mode not in ("grid", "standalone"):
        raise ValueError(f"unknown mode {mode!r}")
    if len(schedule) == 0:
        raise EconomicsError("cannot levelize an empty schedule")

    # operating totals scale pro-rata to one year so that short scenarios
    # levelize against the same annualized capital
    scale = STEPS_PER_YEAR / len(schedule)
    cycles = schedule.cycles * scale
    desorbed = schedule.desorbed * scale
    emitted_run = schedule.emitted * scale
    elec_run = schedule.elec_cost * scale
    profit = schedule.profit * scale

    crf_args = (model.discount_rate, model.lifetime_years)
    solar_annual = annualize(
        capex_solar(design.cp, design.cr, design.h_rated, model), *crf_args
    )
    dac_annual = annualize(capex_dac(tech, model), *crf_args)
    sorbent_annual = model.sorbent_om_per_cycle * cycles

    if mode == "grid":
        # objective prices carry the carbon adder; back it out for cash
        electricity = elec_run - rho_e * emitted_run
        emitted = emitted_run
    else:
        electricity = annualize(
            design.pv_kw * model.unit_capex_pv
            + design.battery_kwh * model.unit_capex_battery,
            *crf_args,
        )
        emitted = 0.0

    net = desorbed - emitted
    if net <= 0:
        raise EconomicsError(
            "net CO2 removal is not positive: emissions from consumed energy "
            "exceed captured CO2"
        )

    total_annual = dac_annual + sorbent_annual + electricity + solar_annual
    if total_annual <= 0:
        raise EconomicsError("degenerate cost model: nothing is ever paid")

    capex_all = total_capex(design, model, tech, mode)
    return CostBreakdown(
        dac_capex=dac_annual,
        sorbent_om=sorbent_annual,
        electricity=electricity,
        thermal=solar_annual,
        net_co2_t=net,
        lco2=total_annual / net,
        payback_years=payback_years(capex_all, profit),
        capture_efficiency=capture_efficiency(desorbed, emitted),
    )
