"""Cost arithmetic: annualization, capex curves, levelized cost per net ton."""

from __future__ import annotations

import math

import pytest

from heliodac.design import DesignParams
from heliodac.economics import (
    DAC_MODULE_T_PER_YEAR,
    STEPS_PER_YEAR,
    CostModel,
    EconomicsError,
    annualize,
    capex_dac,
    capex_solar,
    capture_efficiency,
    lco2,
    payback_years,
    total_capex,
)
from heliodac.policy import empty_schedule

from .conftest import toy_tech


def bare_model(**kw):
    """All unit costs zeroed unless named, zero discount, 10-year life."""
    base = dict(
        unit_capex_cst=0.0, unit_capex_storage=0.0, unit_capex_dac=0.0,
        unit_capex_pv=0.0, unit_capex_battery=0.0, sorbent_om_per_cycle=0.0,
        discount_rate=0.0, lifetime_years=10, scaling_discount=0.0,
    )
    base.update(kw)
    return CostModel(**base)


def year_schedule(steps=STEPS_PER_YEAR, **totals):
    s = empty_schedule(steps)
    for k, v in totals.items():
        setattr(s, k, v)
    return s


class TestCostModel:
    def test_defaults_valid(self):
        CostModel()

    @pytest.mark.parametrize(
        "field,value",
        [
            ("unit_capex_cst", -1.0), ("sorbent_om_per_cycle", -0.1),
            ("discount_rate", 1.0), ("discount_rate", -0.05),
            ("lifetime_years", 0), ("scaling_discount", 1.0),
        ],
    )
    def test_validation(self, field, value):
        with pytest.raises(ValueError):
            CostModel(**{field: value})


class TestAnnualize:
    def test_zero_rate_is_straight_line(self):
        assert annualize(1000.0, 0.0, 8) == pytest.approx(125.0)

    def test_single_year_pays_principal_plus_interest(self):
        assert annualize(100.0, 0.07, 1) == pytest.approx(107.0)

    def test_capital_recovery_factor(self):
        # annuity formula transcription: r (1+r)^n / ((1+r)^n - 1)
        g = 1.07**20
        assert annualize(1.0, 0.07, 20) == pytest.approx(0.07 * g / (g - 1.0))
        assert annualize(1.0, 0.07, 20) == pytest.approx(0.0943929, abs=1e-7)

    def test_needs_a_year(self):
        with pytest.raises(ValueError):
            annualize(1.0, 0.05, 0)


class TestCapexSolar:
    def test_unit_collector_at_four_units_scale(self):
        model = bare_model(unit_capex_cst=1.0, scaling_discount=0.15)
        assert capex_solar(2.0, 2.0, 0.0, model) == pytest.approx(2.89, abs=1e-9)

    def test_base_scale_has_no_discount(self):
        model = bare_model(unit_capex_cst=5.0)
        assert capex_solar(1.0, 1.0, 0.0, model) == pytest.approx(5.0)

    def test_doubling_scales_by_learned_factor(self):
        model = bare_model(unit_capex_cst=1.0, scaling_discount=0.15)
        one = capex_solar(2.0, 1.0, 0.0, model)
        two = capex_solar(4.0, 1.0, 0.0, model)
        assert two == pytest.approx(one * 2.0 * 0.85)

    def test_storage_term_is_per_kwh(self):
        model = CostModel()
        with_store = capex_solar(1.0, 1.0, 10.0, model)
        without = capex_solar(1.0, 1.0, 0.0, model)
        assert with_store - without == pytest.approx(20.0 * 10.0 * 1000.0)

    def test_validation(self):
        model = CostModel()
        with pytest.raises(ValueError, match="positive"):
            capex_solar(0.0, 1.0, 0.0, model)
        with pytest.raises(ValueError, match="at least 1"):
            capex_solar(1.0, 0.5, 0.0, model)


class TestCapexDac:
    def test_small_module_pays_full_unit_cost(self):
        # under one module-year of nameplate there is nothing to learn from
        tech = toy_tech()  # X_max=1 t, 1 h cycle: 8760 t/yr > base, so shrink
        small = toy_tech(x_max=0.5)
        assert small.X_max * 8760.0 / small.cycle_hours < DAC_MODULE_T_PER_YEAR
        model = bare_model(unit_capex_dac=2.0, scaling_discount=0.15)
        assert capex_dac(small, model) == pytest.approx(2.0 * 4380.0)
        assert capex_dac(tech, model) < 2.0 * 8760.0

    def test_learning_exponent(self):
        model = bare_model(unit_capex_dac=1.0, scaling_discount=0.15)
        tech = toy_tech(x_max=5.0)
        annual = 5.0 * 8760.0
        learn = 0.85 ** math.log2(annual / DAC_MODULE_T_PER_YEAR)
        assert capex_dac(tech, model) == pytest.approx(annual * learn)


class TestSmallHelpers:
    def test_capture_efficiency_point(self):
        assert capture_efficiency(1.0, 0.2) == 0.8

    def test_capture_efficiency_needs_capture(self):
        with pytest.raises(EconomicsError, match="undefined"):
            capture_efficiency(0.0, 0.0)

    def test_net_emitter_goes_negative(self):
        assert capture_efficiency(1.0, 1.5) == pytest.approx(-0.5)

    def test_payback(self):
        assert payback_years(100.0, 25.0) == pytest.approx(4.0)
        assert payback_years(100.0, 0.0) == math.inf
        assert payback_years(100.0, -5.0) == math.inf


class TestLco2:
    def design(self, **kw):
        base = dict(cp=1.0, cr=1.0, t_target=400.0, h_rated=0.0)
        base.update(kw)
        return DesignParams(**base)

    def test_grid_mode_hand_arithmetic(self):
        """Every annual bucket checked by hand on round numbers."""
        model = bare_model(sorbent_om_per_cycle=10.0)
        sched = year_schedule(
            desorbed=100.0, emitted=20.0, cycles=5, elec_cost=1000.0, profit=500.0
        )
        out = lco2(sched, self.design(), model, "grid", toy_tech(), rho_e=2.0)
        assert out.dac_capex == 0.0
        assert out.thermal == 0.0
        assert out.sorbent_om == pytest.approx(50.0)
        # carbon adder backed out of the paid bill: 1000 - 2 * 20
        assert out.electricity == pytest.approx(960.0)
        assert out.net_co2_t == pytest.approx(80.0)
        assert out.lco2 == pytest.approx(1010.0 / 80.0)
        assert out.capture_efficiency == pytest.approx(0.8)
        assert out.payback_years == 0.0  # zero capex pays back immediately
        shares = out.shares
        assert shares["sorbent_om"] == pytest.approx(50.0 / 1010.0)
        assert shares["electricity"] == pytest.approx(960.0 / 1010.0)
        assert sum(shares.values()) == pytest.approx(1.0)

    def test_standalone_swaps_bill_for_capital(self):
        model = bare_model(unit_capex_pv=800.0, unit_capex_battery=150.0)
        design = self.design(pv_kw=1000.0, battery_kwh=2000.0)
        sched = year_schedule(desorbed=100.0, emitted=20.0, elec_cost=1000.0)
        out = lco2(sched, design, model, "standalone", toy_tech())
        # straight-line over 10 years on 800k + 300k of off-grid kit
        assert out.electricity == pytest.approx(110000.0)
        assert out.net_co2_t == pytest.approx(100.0)  # off-grid emits nothing
        assert out.capture_efficiency == 1.0
        assert out.lco2 == pytest.approx(1100.0)
        assert total_capex(design, model, toy_tech(), "standalone") == pytest.approx(1.1e6)
        assert total_capex(design, model, toy_tech(), "grid") == 0.0

    def test_short_run_levelizes_pro_rata(self):
        model = bare_model(sorbent_om_per_cycle=10.0, unit_capex_dac=3.0)
        tech = toy_tech()
        full = year_schedule(
            desorbed=100.0, emitted=20.0, cycles=6, elec_cost=1000.0, profit=60.0
        )
        half = year_schedule(
            steps=STEPS_PER_YEAR // 2,
            desorbed=50.0, emitted=10.0, cycles=3, elec_cost=500.0, profit=30.0,
        )
        a = lco2(full, self.design(), model, "grid", tech)
        b = lco2(half, self.design(), model, "grid", tech)
        assert b.lco2 == pytest.approx(a.lco2, rel=1e-12)
        assert b.net_co2_t == pytest.approx(a.net_co2_t, rel=1e-12)
        assert b.payback_years == pytest.approx(a.payback_years, rel=1e-12)

    def test_full_model_breakdown_consistency(self):
        model = CostModel()
        design = self.design(cp=3.0, h_rated=70.0)
        sched = year_schedule(
            desorbed=2.0e4, emitted=1.0e3, cycles=3000, elec_cost=2.0e5, profit=1.0e6
        )
        out = lco2(sched, design, model, "grid", toy_tech(x_max=5.0))
        assert out.total_annual == pytest.approx(
            out.dac_capex + out.sorbent_om + out.electricity + out.thermal
        )
        assert out.lco2 == pytest.approx(out.total_annual / out.net_co2_t)
        assert out.payback_years > 0

    def test_errors(self):
        model = bare_model(sorbent_om_per_cycle=1.0)
        good = year_schedule(desorbed=10.0, emitted=1.0, cycles=2, elec_cost=5.0)
        with pytest.raises(ValueError, match="unknown mode"):
            lco2(good, self.design(), model, "islanded", toy_tech())
        with pytest.raises(EconomicsError, match="empty"):
            lco2(empty_schedule(0), self.design(), model, "grid", toy_tech())
        burner = year_schedule(desorbed=10.0, emitted=12.0, cycles=2, elec_cost=5.0)
        with pytest.raises(EconomicsError, match="not positive"):
            lco2(burner, self.design(), model, "grid", toy_tech())
        free = year_schedule(desorbed=10.0)
        with pytest.raises(EconomicsError, match="nothing is ever paid"):
            lco2(free, self.design(), bare_model(), "grid", toy_tech())
