"""Lumped two-node thermal verification of an operating schedule.

The scheduler treats the sand store as a pure energy ledger. This module
re-checks each regeneration run (a contiguous block of desorb steps) with
an explicit transient: a sand node discharging through a heat exchanger
into a DAC node that must reach and hold the regeneration temperature long
enough to deliver the process heat the schedule assumed. Between runs the
DAC node is cooled back down through a water loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dac import DESORB, STEP_SECONDS, Technology, desorption_steps, adsorption_steps
from .policy import Schedule
from .solar import StorageParams

J_PER_MWH = 3.6e9
WATER_SINK_C = 15.0
SAND_CP_J_PER_KGK = 830.0   # silica sand sensible heat
_REL_TOL = 1e-9


class CalibrationError(RuntimeError):
    """No admissible heat-exchanger conductance meets the timing targets."""


@dataclass
class ThermalPlant:
    """Two-node plant: sand store and DAC regeneration mass.

    Temperatures are states and change during simulation; everything else
    is fixed hardware. `process_heat_mwh` is the heat one desorb step must
    deliver to the sorbent, matching the scheduler's per-step draw.
    """

    sand_mass_kg: float
    sand_cp_j_per_kgk: float
    dac_mass_j_per_k: float
    ua_heat_w_per_k: float
    ua_cool_w_per_k: float
    process_heat_mwh: float
    ambient_c: float = 20.0
    cool_target_c: float = 20.0
    regen_target_c: float = 100.0
    source_min_c: float = 300.0
    sim_step_s: float = 10.0
    sand_temp_c: float = 300.0
    dac_temp_c: float = 20.0

    def __post_init__(self) -> None:
        if self.sand_mass_kg <= 0 or self.sand_cp_j_per_kgk <= 0:
            raise ValueError("sand node needs positive mass and specific heat")
        if not self.dac_mass_j_per_k > 0:
            raise ValueError("DAC thermal mass must be positive and finite")
        if not (self.ua_heat_w_per_k > 0 and self.ua_cool_w_per_k > 0):
            raise ValueError("heat-exchange conductances must be positive")
        if self.process_heat_mwh < 0:
            raise ValueError("process heat per step must be non-negative")
        if self.sim_step_s <= 0:
            raise ValueError("sim step must be positive")
        if not self.cool_target_c > WATER_SINK_C:
            raise ValueError("cooling target must sit above the water loop")
        if not self.regen_target_c > self.cool_target_c:
            raise ValueError("regeneration target must exceed the cooling target")
        if not self.source_min_c > self.regen_target_c:
            raise ValueError("minimum source temperature must exceed regeneration target")

    @property
    def c_sand(self) -> float:
        return self.sand_mass_kg * self.sand_cp_j_per_kgk

    def sand_temp_from_energy(self, h_mwh: float) -> float:
        """Map the scheduler's stored energy onto a sand temperature."""
        return self.source_min_c + h_mwh * J_PER_MWH / self.c_sand

    def stability_limit_s(self) -> float:
        c_min = min(self.c_sand, self.dac_mass_j_per_k)
        ua_max = max(self.ua_heat_w_per_k, self.ua_cool_w_per_k)
        return 0.1 * c_min / ua_max


@dataclass
class CycleRecord:
    """Transient outcome of one regeneration run."""

    start_step: int
    steps: int
    heat_up_s: float
    hold_s: float
    cool_down_s: float
    demand_mwh: float
    delivered_mwh: float
    feasible: bool


@dataclass
class CycleReport:
    """All regeneration runs of a schedule plus aggregate feasibility."""

    cycles: list[CycleRecord] = field(default_factory=list)
    energy_residual: float = 0.0
    throughput_mwh: float = 0.0

    @property
    def feasible_fraction(self) -> float:
        if not self.cycles:
            return 1.0
        return sum(c.feasible for c in self.cycles) / len(self.cycles)


def make_plant(
    storage: StorageParams,
    tech: Technology,
    dac_mass_j_per_k: float = 1e7,
    sand_cp_j_per_kgk: float = SAND_CP_J_PER_KGK,
    ambient_c: float = 20.0,
) -> ThermalPlant:
    """Size an uncalibrated plant template from the store rating.

    The rated store energy spans the 100 K band above the minimum source
    temperature, which fixes the sand mass given its specific heat. The
    conductances are placeholders until `calibrate` replaces them.
    """
    span_k = 100.0
    mass = storage.rated_mwh * J_PER_MWH / (span_k * sand_cp_j_per_kgk)
    return ThermalPlant(
        sand_mass_kg=mass,
        sand_cp_j_per_kgk=sand_cp_j_per_kgk,
        dac_mass_j_per_k=dac_mass_j_per_k,
        ua_heat_w_per_k=1.0,
        ua_cool_w_per_k=1.0,
        process_heat_mwh=tech.H,
        ambient_c=ambient_c,
    )


def calibrate(template: ThermalPlant, tech: Technology) -> ThermalPlant:
    """Pick conductances so a worst-case cycle fits with 20 % slack.

    Worst case: sand at the minimum source temperature, DAC starting at the
    cooling target. Heat-up follows Newton heating against a constant
    source; the hold phase must then stream the full desorption demand at
    the post-heat-up driving force. Cool-down gets the rest of the cycle.
    """
    n_d = desorption_steps(tech)
    n_a = adsorption_steps(tech)
    if n_d <= 0:
        raise CalibrationError("technology never desorbs; nothing to calibrate")
    d_desorb = n_d * STEP_SECONDS
    cycle_s = (n_a + n_d) * STEP_SECONDS
    margin = 0.8

    c_dac = template.dac_mass_j_per_k
    lift = template.regen_target_c - template.cool_target_c
    drive_0 = template.source_min_c - template.cool_target_c
    drive_hold = template.source_min_c - template.regen_target_c
    e_hold = n_d * tech.H * J_PER_MWH
    ua_heat = (c_dac * math.log(drive_0 / drive_hold) + e_hold / drive_hold) / (
        margin * d_desorb
    )

    cool_window = cycle_s - d_desorb
    if cool_window <= 0:
        raise CalibrationError("cycle leaves no time to cool the DAC node")
    cool_ratio = (template.regen_target_c - WATER_SINK_C) / (
        template.cool_target_c - WATER_SINK_C
    )
    ua_cool = c_dac * math.log(cool_ratio) / (margin * cool_window)

    if not (math.isfinite(ua_heat) and math.isfinite(ua_cool)) or ua_heat <= 0 or ua_cool <= 0:
        raise CalibrationError("no finite positive conductance meets the timing targets")

    plant = replace(
        template,
        ua_heat_w_per_k=ua_heat,
        ua_cool_w_per_k=ua_cool,
        process_heat_mwh=tech.H,
    )
    # explicit Euler needs dt well under the smallest node time constant
    limit = plant.stability_limit_s()
    if plant.sim_step_s > limit:
        n_sub = math.ceil(STEP_SECONDS / limit)
        if n_sub > 100_000:
            raise CalibrationError("stable sim step would be impractically small")
        plant = replace(plant, sim_step_s=STEP_SECONDS / n_sub)
    return plant


def _cool(t_dac: float, plant: ThermalPlant, gap_s: float) -> tuple[float, float, float]:
    """Exponential cool-down toward the water loop, stopped at the target.

    Returns (new temperature, time spent cooling, heat removed in J).
    """
    if t_dac <= plant.cool_target_c or gap_s <= 0:
        return t_dac, 0.0, 0.0
    c_dac = plant.dac_mass_j_per_k
    tau = c_dac / plant.ua_cool_w_per_k
    t_need = tau * math.log((t_dac - WATER_SINK_C) / (plant.cool_target_c - WATER_SINK_C))
    if t_need <= gap_s:
        removed = c_dac * (t_dac - plant.cool_target_c)
        return plant.cool_target_c, t_need, removed
    t_new = WATER_SINK_C + (t_dac - WATER_SINK_C) * math.exp(-gap_s / tau)
    return t_new, gap_s, c_dac * (t_dac - t_new)


def simulate_schedule(
    schedule: Schedule,
    plant: ThermalPlant,
    start_h: float | None = None,
) -> CycleReport:
    """Explicit-Euler transient check of every regeneration run.

    The sand node is re-anchored to the schedule's energy ledger at the
    start of each run, then exchanges heat with the DAC node while external
    charging (reconstructed from the ledger deltas) continues. A run is
    feasible when the DAC reaches the regeneration temperature and the full
    process demand is delivered before the run ends.
    """
    dt = plant.sim_step_s
    if dt > STEP_SECONDS:
        raise ValueError("sim step exceeds the schedule step")
    if dt > plant.stability_limit_s():
        raise ValueError("sim step violates the explicit-Euler stability bound")
    n_sub = max(1, round(STEP_SECONDS / dt))
    dt = STEP_SECONDS / n_sub

    phases = np.asarray(schedule.phase)
    h = np.asarray(schedule.h, dtype=float)
    n = len(phases)
    tech_h_j = plant.process_heat_mwh * J_PER_MWH
    c_sand = plant.c_sand
    c_dac = plant.dac_mass_j_per_k
    ua = plant.ua_heat_w_per_k
    t_regen = plant.regen_target_c

    report = CycleReport()
    residual = 0.0
    throughput = 0.0

    desorb = phases == DESORB
    starts = np.flatnonzero(desorb & ~np.roll(desorb, 1))
    if desorb.size and desorb[0]:
        starts = np.unique(np.concatenate(([0], starts)))
    t_dac = plant.dac_temp_c
    prev_end = 0

    for t0 in starts:
        t1 = t0
        while t1 < n and desorb[t1]:
            t1 += 1
        steps = t1 - t0

        # cool through the idle/adsorb gap since the previous run ended
        gap_s = (t0 - prev_end) * STEP_SECONDS
        t_dac, cool_s, removed = _cool(t_dac, plant, gap_s)
        if report.cycles:
            report.cycles[-1].cool_down_s = float(cool_s)
        throughput += removed / J_PER_MWH

        if t0 > 0:
            h_pre = h[t0 - 1]
        elif start_h is not None:
            h_pre = start_h
        else:
            h_pre = h[0] + plant.process_heat_mwh
        t_sand = plant.sand_temp_from_energy(h_pre)
        t_sand_0, t_dac_0 = t_sand, t_dac

        demand = 0.0
        delivered = 0.0
        e_ext = 0.0
        e_from_sand = 0.0
        heat_up_s = 0.0
        hold_s = 0.0
        reached = False

        for t in range(t0, t1):
            demand += tech_h_j
            h_prev = h[t - 1] if t > 0 else h_pre
            ext_w = (h[t] - h_prev + plant.process_heat_mwh) * J_PER_MWH / STEP_SECONDS
            for _ in range(n_sub):
                if t_dac < t_regen:
                    heat_up_s += dt
                    q = max(ua * (t_sand - t_dac), 0.0) * dt
                    lift = c_dac * (t_regen - t_dac)
                    if q > lift:
                        # crossing the target mid-substep: surplus goes to process
                        take = min(q - lift, demand - delivered)
                        delivered += take
                        q = lift + take
                        t_dac = t_regen
                        reached = True
                    else:
                        t_dac += q / c_dac
                        if t_dac >= t_regen - 1e-12:
                            t_dac = t_regen
                            reached = True
                else:
                    hold_s += dt
                    want = demand - delivered
                    avail = max(ua * (t_sand - t_dac), 0.0) * dt
                    q = min(want, avail)
                    delivered += q
                t_sand += (ext_w * dt - q) / c_sand
                e_ext += ext_w * dt
                e_from_sand += q

        feasible = bool(reached and delivered >= demand * (1.0 - _REL_TOL))
        report.cycles.append(
            CycleRecord(
                start_step=int(t0),
                steps=int(steps),
                heat_up_s=float(heat_up_s),
                hold_s=float(hold_s),
                cool_down_s=0.0,
                demand_mwh=float(demand / J_PER_MWH),
                delivered_mwh=float(delivered / J_PER_MWH),
                feasible=feasible,
            )
        )
        balance = (
            c_sand * (t_sand - t_sand_0)
            + c_dac * (t_dac - t_dac_0)
            - (e_ext - delivered)
        )
        residual = max(residual, abs(balance))
        throughput += (e_ext + delivered + e_from_sand) / J_PER_MWH
        prev_end = t1

    # trailing cool-down after the final run
    gap_s = (n - prev_end) * STEP_SECONDS
    t_dac, cool_s, removed = _cool(t_dac, plant, gap_s)
    if report.cycles:
        report.cycles[-1].cool_down_s = float(cool_s)
    throughput += removed / J_PER_MWH

    report.energy_residual = residual / J_PER_MWH
    report.throughput_mwh = throughput
    return report
