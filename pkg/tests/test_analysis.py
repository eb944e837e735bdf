#!/usr/bin/env python3
"""
Test suite for instanton observables, the resolvent and the sweep drivers
"""

import logging
import math
import os
import sys

import numpy as np
import pytest

# Add the parent directory to the path to import our module
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.rabilab.analysis import (
    LMT1,
    LMT2,
    HeatKernelSpec,
    SweepPoint,
    SweepSchedule,
    action_report,
    e_pm_heat_kernel,
    euclidean_action_from_gap,
    evaluate_point,
    g_function,
    lmt1_schedule,
    lmt2_schedule,
    minima_separation,
    predicted_levels,
    resolvent_distance,
    resolvent_report,
    run_sweep,
    schedule_from_rows,
    self_energy,
    tunneling_gap,
)
from src.rabilab.exceptions import (
    DomainError,
    ScheduleError,
    UndefinedInputError,
    ValidationError,
)
from src.rabilab.hamiltonians import ModelKind
from src.rabilab.operators import ModelParams
from src.rabilab.spectra import (
    TruncationSpec,
    converged_spectrum,
    degeneracy_gaps,
    detect_susy,
)


@pytest.fixture
def resonant():
    return ModelParams(omega_a=1.0, omega_c=1.0)


@pytest.fixture
def detuned():
    return ModelParams(omega_a=0.5, omega_c=1.0)


class TestSchedules:
    """Test LMT1 and LMT2 schedule construction"""

    def test_lmt1_grid(self, detuned):
        """Test a uniform coupling grid at fixed frequencies"""
        schedule = lmt1_schedule(detuned, 0.0, 1.0, 5)
        assert schedule.mode == LMT1
        assert [p.sweep_param for p in schedule.points] == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert all(p.params.omega_a == 0.5 for p in schedule.points)
        assert [p.index for p in schedule.points] == list(range(5))

    def test_lmt1_single_point(self, detuned):
        """Test one step gives g_start alone"""
        schedule = lmt1_schedule(detuned, 0.7, 3.0, 1)
        assert len(schedule.points) == 1
        assert schedule.points[0].params.g == 0.7

    @pytest.mark.parametrize("args", [(0.0, 1.0, 0), (-0.1, 1.0, 3), (2.0, 1.0, 3)])
    def test_lmt1_invalid(self, detuned, args):
        """Test empty or reversed coupling ranges are rejected"""
        with pytest.raises(ScheduleError):
            lmt1_schedule(detuned, *args)

    def test_lmt2_default(self, resonant):
        """Test the default schedule runs from the SUSY point to the free boson"""
        schedule = lmt2_schedule(resonant)
        assert schedule.mode == LMT2
        assert len(schedule.points) == 61
        first, last = schedule.points[0].params, schedule.points[-1].params
        assert (first.omega_a, first.g) == (1.0, 0.0)
        assert (last.omega_a, last.g) == (0.0, 3.0)

    def test_lmt2_custom(self, detuned):
        """Test g_max and omega_a(0) overrides"""
        schedule = lmt2_schedule(detuned, steps=3, g_max=2.0, omega_a0=0.8)
        middle = schedule.points[1]
        assert middle.sweep_param == 0.5
        assert middle.params.omega_a == pytest.approx(0.4)
        assert middle.params.g == pytest.approx(1.0)

    @pytest.mark.parametrize("rows,message", [
        ([(0.0, 1.0, 0.1), (1.0, 0.0, 3.0)], "g\\(0\\) = 0"),
        ([(0.0, 1.0, 0.0), (1.0, 0.2, 3.0)], "omega_a\\(1\\) = 0"),
        ([(0.0, 1.0, 0.0), (0.5, 0.0, 1.0)], "omega_a\\(r\\) > 0"),
        ([(0.0, 1.0, 0.0), (0.5, 0.5, 0.0)], "g\\(r\\) > 0"),
        ([(1.5, 0.0, 3.0)], "\\[0, 1\\]"),
    ])
    def test_lmt2_constraints(self, resonant, rows, message):
        """Test each endpoint constraint is named when violated"""
        with pytest.raises(ScheduleError, match=message):
            schedule_from_rows(resonant, rows)

    def test_schedule_rows(self, resonant):
        """Test tabulated rows become schedule points in order"""
        schedule = schedule_from_rows(resonant, [(0.0, 1.0, 0.0), (0.5, 0.3, 1.2),
                                                 (1.0, 0.0, 2.0)])
        assert [p.params.g for p in schedule.points] == [0.0, 1.2, 2.0]
        assert schedule.points[1].params.omega_a == 0.3

    def test_bad_mode(self, resonant):
        """Test unknown modes and empty schedules are rejected"""
        with pytest.raises(ScheduleError):
            SweepSchedule("lmt3", (SweepPoint(0, 0.0, resonant),))
        with pytest.raises(ScheduleError):
            SweepSchedule(LMT1, ())


class TestActionFormulas:
    """Test the gap -> action -> G(g) -> q0 formulas"""

    def test_self_energy(self):
        """Test Sigma = -hbar g^2 / w_c"""
        assert self_energy(ModelParams(omega_a=1.0, omega_c=2.0, g=1.0, hbar=0.5)) == -0.25

    def test_action_from_gap(self, detuned):
        """Test S = -hbar ln(gap / hbar w_a)"""
        assert euclidean_action_from_gap(0.5, detuned) == 0.0
        assert euclidean_action_from_gap(0.5 * math.exp(-2.0), detuned) == pytest.approx(2.0)

    def test_action_hbar(self):
        """Test hbar scales both the reference gap and the action"""
        params = ModelParams(omega_a=1.0, omega_c=1.0, hbar=0.5)
        assert euclidean_action_from_gap(0.5 * math.exp(-3.0), params) == pytest.approx(1.5)

    def test_closed_gap(self, detuned):
        """Test a closed gap or w_a = 0 gives an infinite action"""
        assert euclidean_action_from_gap(0.0, detuned) == math.inf
        assert euclidean_action_from_gap(-1e-15, detuned) == math.inf
        free = ModelParams(omega_a=0.0, omega_c=1.0, g=3.0)
        assert euclidean_action_from_gap(1e-3, free) == math.inf

    def test_oversized_gap_warns(self, detuned, caplog):
        """Test a gap above hbar w_a logs a warning and yields a negative action"""
        with caplog.at_level(logging.WARNING):
            action = euclidean_action_from_gap(1.0, detuned)
        assert action < 0
        assert "negative" in caplog.text

    def test_g_function(self):
        """Test G = S w_c^2 / (2 hbar g^2) - 1"""
        params = ModelParams(omega_a=0.5, omega_c=1.0, g=1.0)
        assert g_function(2.0, params) == pytest.approx(0.0)
        assert g_function(1.0, params) == pytest.approx(-0.5)
        assert g_function(math.inf, params) == math.inf

    def test_g_function_undefined(self, detuned):
        """Test G is undefined at g = 0"""
        with pytest.raises(UndefinedInputError):
            g_function(0.0, detuned)

    def test_predicted_levels(self):
        """Test zero action reproduces the unperturbed pair"""
        params = ModelParams(omega_a=0.5, omega_c=1.0, g=1.0)
        assert predicted_levels(0.0, params) == pytest.approx((0.25, 0.75))
        low, high = predicted_levels(2.0, params)
        assert high - low == pytest.approx(0.5 * math.exp(-2.0))
        assert low + high == pytest.approx(1.0)

    def test_minima_separation(self, detuned):
        """Test q0 = (3 S / (4 sqrt(2 c)))^(1/3)"""
        assert minima_separation(36.0, 0.5, detuned) == pytest.approx(3.0)
        assert minima_separation(0.0, 0.5, detuned) == 0.0
        assert minima_separation(math.inf, 0.5, detuned) == math.inf

    @pytest.mark.parametrize("s_euc,c_dw", [(1.0, 0.0), (1.0, -2.0), (-0.5, 1.0)])
    def test_minima_separation_invalid(self, detuned, s_euc, c_dw):
        """Test non-positive c_dw and negative actions are rejected"""
        with pytest.raises(ValidationError):
            minima_separation(s_euc, c_dw, detuned)


class TestActionReport:
    """Test the combined per-point report"""

    def test_uncoupled(self, resonant):
        """Test g = 0: zero action, G undefined, mean on hbar w_c / 2"""
        report = action_report(resonant, 0.0, 1.0, c_dw=0.5)
        assert report.gap == 1.0
        assert report.s_euc == 0.0
        assert report.g_undefined and math.isnan(report.g_of_g)
        assert not report.g_bound_violated
        assert not report.negative_action
        assert report.mean_deviation == 0.0
        assert report.q0 == 0.0

    def test_round_off_not_negative(self, resonant):
        """Test a gap exceeding hbar w_a by round-off is not flagged"""
        report = action_report(resonant, -1e-16, 1.0)
        assert not report.negative_action

    def test_closed_gap(self):
        """Test a closed gap gives infinite action and q0"""
        params = ModelParams(omega_a=0.5, omega_c=1.0, g=2.0)
        report = action_report(params, 0.5, 0.5, c_dw=1.0)
        assert report.gap_zero
        assert report.s_euc == math.inf
        assert report.q0 == math.inf

    def test_negative_action(self, detuned):
        """Test a gap above hbar w_a sets the flag and skips q0"""
        report = action_report(detuned, 0.0, 1.0, c_dw=1.0)
        assert report.negative_action
        assert report.q0 is None

    def test_mean_deviation_renormalized(self):
        """Test the self-energy is added back only for the unrenormalized model"""
        params = ModelParams(omega_a=0.5, omega_c=1.0, g=1.0)
        plain = action_report(params, -0.6, -0.4)
        ren = action_report(params, 0.4, 0.6, renormalized=True)
        assert plain.mean_deviation == pytest.approx(0.0)
        assert ren.mean_deviation == pytest.approx(0.0)
        assert plain.self_energy == -1.0

    def test_weak_coupling_exceeds_bound(self):
        """Test G(g) approaches w_a^2/(w_c^2 - w_a^2) at weak coupling"""
        params = ModelParams(omega_a=0.5, omega_c=1.0, g=0.05)
        e0, e1, _ = tunneling_gap(params)
        report = action_report(params, e0, e1)
        assert report.g_of_g > 0.25
        assert report.g_bound_violated

    @pytest.mark.parametrize("g", [2.0, 2.5, 3.0])
    def test_strong_coupling_within_bound(self, g):
        """Test G(g) lies in [-1, 0] up to the slack once the wells separate"""
        params = ModelParams(omega_a=0.5, omega_c=1.0, g=g)
        e0, e1, _ = tunneling_gap(params)
        report = action_report(params, e0, e1)
        assert -1.02 <= report.g_of_g <= 0.02
        assert not report.g_bound_violated


class TestTunnelingGap:
    """Test the measured gap of H_QR"""

    def test_uncoupled(self, detuned):
        """Test g = 0 gives the bare qubit splitting"""
        e0, e1, gap = tunneling_gap(detuned)
        assert (e0, e1) == pytest.approx((0.25, 0.75))
        assert gap == pytest.approx(0.5)

    def test_strong_coupling_gap_closes(self):
        """Test the gap at g = 2 is exponentially small"""
        params = ModelParams(omega_a=1.0, omega_c=1.0, g=2.0)
        _, _, gap = tunneling_gap(params)
        assert 0 < gap < 0.05


class TestHeatKernel:
    """Test E+ and E- from the imaginary-time limit"""

    @pytest.mark.parametrize("g", [0.0, 0.5, 1.0])
    def test_matches_sector_ground_levels(self, g):
        """Test E+/E- equal the two lowest levels of H~"""
        params = ModelParams(omega_a=1.0, omega_c=1.0, g=g)
        e_plus, e_minus = e_pm_heat_kernel(params)
        result = converged_spectrum(params, ModelKind.TRANSFORMED, 2)
        assert result.parity_sector == ("plus", "minus")
        assert e_plus == pytest.approx(result.levels[0], abs=1e-8)
        assert e_minus == pytest.approx(result.levels[1], abs=1e-8)

    def test_uncoupled_values(self, resonant):
        """Test g = 0: E+ = 0 and E- = hbar w_a"""
        e_plus, e_minus = e_pm_heat_kernel(resonant)
        assert e_plus == pytest.approx(0.0, abs=1e-10)
        assert e_minus == pytest.approx(1.0, abs=1e-10)

    def test_renormalized_shift(self):
        """Test the renormalized energies sit hbar g^2 / w_c higher"""
        params = ModelParams(omega_a=1.0, omega_c=1.0, g=0.5)
        plain = e_pm_heat_kernel(params)
        ren = e_pm_heat_kernel(params, renormalized=True)
        assert ren[0] - plain[0] == pytest.approx(0.25, abs=1e-8)
        assert ren[1] - plain[1] == pytest.approx(0.25, abs=1e-8)

    @pytest.mark.parametrize("kwargs", [{"beta": 0.0}, {"beta_growth": 1.0}, {"rel_tol": -1.0}])
    def test_spec_validation(self, kwargs):
        """Test heat-kernel settings are validated"""
        with pytest.raises(ValidationError):
            HeatKernelSpec(**kwargs)


class TestResolvent:
    """Test the resolvent distance to the free boson"""

    def test_uncoupled_resonant(self, resonant):
        """Test g = 0, w_a = w_c gives 1/sqrt(5) at z = i"""
        assert resolvent_distance(resonant, 1j) == pytest.approx(0.4472135955, abs=1e-8)

    def test_uncoupled_detuned(self, detuned):
        """Test g = 0, w_a = 0.5 at z = i"""
        assert resolvent_distance(detuned, 1j) == pytest.approx(0.216930, abs=1e-6)

    def test_free_boson_limit(self):
        """Test w_a = 0 removes the difference entirely"""
        params = ModelParams(omega_a=0.0, omega_c=1.0, g=1.5)
        assert resolvent_distance(params, 0.3 + 1j) < 1e-10

    def test_real_z_rejected(self, resonant):
        """Test the resolvent needs Im z != 0"""
        with pytest.raises(DomainError):
            resolvent_report(resonant, 0.5)

    def test_report(self, resonant):
        """Test the report carries the truncation it settled at"""
        report = resolvent_report(resonant, 2j)
        assert report.converged_dim >= 32
        assert report.distance == resolvent_distance(resonant, 2j)

    @pytest.mark.slow
    def test_decreases_with_coupling(self):
        """Test the distance shrinks as the coupling grows"""
        distances = [resolvent_distance(ModelParams(omega_a=0.5, omega_c=1.0, g=g), 1j)
                     for g in np.arange(0.0, 3.01, 0.5)]
        for before, after in zip(distances, distances[1:]):
            assert after <= before + 1e-6
        assert distances[-1] < 0.05


class TestSweeps:
    """Test sweep evaluation"""

    def test_evaluate_point(self, detuned):
        """Test one point yields a spectrum and report"""
        point = SweepPoint(0, 0.5, ModelParams(omega_a=0.5, omega_c=1.0, g=0.5))
        outcome = evaluate_point(point, ModelKind.QR, 4, TruncationSpec())
        assert outcome.ok
        assert len(outcome.spectrum.levels) == 4
        assert outcome.report.gap == pytest.approx(outcome.spectrum.levels[1]
                                                   - outcome.spectrum.levels[0])

    def test_failure_recorded(self, caplog):
        """Test a point that cannot converge is recorded rather than raised"""
        point = SweepPoint(3, 3.0, ModelParams(omega_a=0.5, omega_c=1.0, g=3.0))
        trunc = TruncationSpec(initial_dim=8, max_dim=10, level_tol=1e-14)
        with caplog.at_level(logging.WARNING):
            outcome = evaluate_point(point, ModelKind.QR, 2, trunc)
        assert not outcome.ok
        assert outcome.spectrum is None and outcome.report is None
        assert "did not converge" in outcome.error
        assert "sweep point 3" in caplog.text

    def test_run_sweep_order(self, detuned):
        """Test outcomes come back in schedule order"""
        schedule = lmt1_schedule(detuned, 0.0, 1.0, 3)
        outcomes = run_sweep(schedule, ModelKind.QR_REN, 4)
        assert [o.point.index for o in outcomes] == [0, 1, 2]
        assert all(o.ok for o in outcomes)

    def test_run_sweep_needs_two_levels(self, detuned):
        """Test k < 2 is rejected"""
        with pytest.raises(ValidationError):
            run_sweep(lmt1_schedule(detuned, 0.0, 1.0, 2), ModelKind.QR, 1)

    @pytest.mark.slow
    def test_parallel_matches_serial(self, detuned):
        """Test worker processes give the same levels in the same order"""
        schedule = lmt1_schedule(detuned, 0.0, 2.0, 5)
        serial = run_sweep(schedule, ModelKind.QR, 4, jobs=1)
        parallel = run_sweep(schedule, ModelKind.QR, 4, jobs=2)
        assert [o.spectrum.levels for o in serial] == [o.spectrum.levels for o in parallel]

    @pytest.mark.slow
    def test_lmt1_collapse(self, detuned):
        """Test the renormalized ground pair closes without crossing"""
        schedule = lmt1_schedule(detuned, 0.0, 3.0, 13)
        outcomes = run_sweep(schedule, ModelKind.QR_REN, 4)
        assert all(o.ok for o in outcomes)
        gaps = [o.report.gap for o in outcomes]
        assert gaps[0] == pytest.approx(0.5)
        assert all(gap > 0 for gap in gaps)
        assert gaps[-1] < 1e-6
        for outcome in outcomes:
            if outcome.point.sweep_param >= 2.0:
                assert not outcome.report.g_bound_violated

    @pytest.mark.slow
    def test_renormalized_doublets(self, detuned):
        """Test ten renormalized levels at g = 3 form five doublets near m + 1/2"""
        outcomes = run_sweep(lmt1_schedule(detuned, 0.0, 3.0, 13), ModelKind.QR_REN, 10)
        assert all(o.ok for o in outcomes)
        assert outcomes[0].report.gap == pytest.approx(0.5, abs=1e-8)
        assert all(o.spectrum.levels[0] < o.spectrum.levels[1] for o in outcomes)
        levels = outcomes[-1].spectrum.levels
        pairs = degeneracy_gaps(levels)
        assert len(pairs) == 5
        for m, gap in pairs:
            assert gap < 1e-3
            midpoint = 0.5 * (levels[2 * m] + levels[2 * m + 1])
            assert midpoint == pytest.approx(m + 0.5, abs=0.05)

    @pytest.mark.slow
    def test_mass_term_keeps_gap_open(self):
        """Test the A^2 term prevents the ground pair from collapsing"""
        base = ModelParams(omega_a=0.5, omega_c=1.0, a2_coeff=0.5)
        outcomes = run_sweep(lmt1_schedule(base, 0.0, 3.0, 7), ModelKind.QR, 2)
        assert all(o.ok for o in outcomes)
        assert min(o.report.gap for o in outcomes) > 0.05

    @pytest.mark.slow
    def test_mass_term_ten_levels(self):
        """Test the A^2 term keeps the two lowest pairs split, doublets sqrt(1 + 4Cg^2) apart"""
        base = ModelParams(omega_a=0.5, omega_c=1.0, a2_coeff=0.5)
        outcomes = run_sweep(lmt1_schedule(base, 0.0, 3.0, 7), ModelKind.QR, 10)
        assert all(o.ok for o in outcomes)
        assert min(o.report.gap for o in outcomes) > 0.05
        strong = outcomes[-1].spectrum
        gaps = dict(degeneracy_gaps(strong))
        assert gaps[0] > 0.05 and gaps[1] > 0.05
        levels = strong.levels
        spacing = 0.5 * (levels[2] + levels[3]) - 0.5 * (levels[0] + levels[1])
        assert spacing == pytest.approx(math.sqrt(19.0), abs=0.1)

    @pytest.mark.slow
    def test_lmt2_starts_supersymmetric(self, resonant):
        """Test the r = 0 end of LMT2 shows the N=2 pattern and r = 1 is gapless"""
        outcomes = run_sweep(lmt2_schedule(resonant, steps=5), ModelKind.QR, 10)
        assert all(o.ok for o in outcomes)
        assert detect_susy(outcomes[0].spectrum).is_susy_n2
        assert not detect_susy(outcomes[-1].spectrum).is_susy_n2
        assert outcomes[-1].report.s_euc == math.inf


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
