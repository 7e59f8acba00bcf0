"""
Unit tests for pseudo-arclength continuation of equilibria and the Hopf coefficient.
"""

import numpy as np
import pytest
from src.epibif.codim2.lyapunov import first_lyapunov_coefficient, lyapunov_l1
from src.epibif.contin.arclength import ContinuationProblem, StepSettings, locate_on_segment, trace_branch
from src.epibif.contin.equilibrium import continue_equilibrium, hopf_frequency, localize_special
from src.epibif.core.exceptions import ContinuationError, DomainError
from src.epibif.models.branch import SpecialKind
from src.epibif.models.state import EquilibriumLabel
from src.epibif.schemas.params import ActiveParam
from src.epibif.system.constants import GAMMA_0
from src.epibif.system.equilibria import disease_free_equilibrium, endemic_equilibria

FOLD_GAMMA_AT_RHO_01 = 0.356902
HOPF_GAMMA_AT_RHO_01 = 0.349638


def _circle() -> ContinuationProblem:
    return ContinuationProblem(
        residual=lambda u: np.array([u[0] ** 2 + u[1] ** 2 - 1.0]),
        jacobian=lambda u: np.array([[2.0 * u[0], 2.0 * u[1]]]),
    )


def _around_circle(settings: StepSettings):
    return trace_branch(_circle(), np.array([1.0, 0.0]), np.array([0.0, 1.0]), settings)


def _endemic(p, label):
    return next(eq for eq in endemic_equilibria(p) if eq.label is label)


class TestArclength:
    """
    Test the predictor-corrector on the unit circle.
    """

    @pytest.mark.unit
    def test_points_stay_on_the_curve(self):
        trace = _around_circle(StepSettings(h0=0.05, hmax=0.05, max_points=40))
        assert len(trace.points) == 40
        for pt in trace.points:
            assert np.hypot(*pt.u) == pytest.approx(1.0, abs=1e-10)
        assert trace.points[1].u[1] > 0.0
        assert all(b.s > a.s for a, b in zip(trace.points[:-1], trace.points[1:], strict=True))

    @pytest.mark.unit
    def test_domain_boundary_stops_trace(self):
        problem = ContinuationProblem(_circle().residual, _circle().jacobian, in_domain=lambda u: u[1] < 0.5)
        trace = trace_branch(problem, np.array([1.0, 0.0]), np.array([0.0, 1.0]), StepSettings(h0=0.05))
        assert trace.stop_reason == "boundary"
        assert not trace.truncated
        assert trace.points[-1].u[1] < 0.5

    @pytest.mark.unit
    def test_step_cap_bounds_steps_past_a_point(self):
        """
        Above the x-axis steps may reach hmax; below it they are capped at 0.01.
        """

        def cap(pt):
            return 0.01 if pt.u[1] < 0.0 else np.inf

        settings = StepSettings(h0=0.05, hmax=0.1, max_points=80)
        trace = trace_branch(_circle(), np.array([1.0, 0.0]), np.array([0.0, 1.0]), settings, step_cap=cap)
        steps = [b.s - a.s for a, b in zip(trace.points[:-1], trace.points[1:], strict=True)]
        capped = [h for a, h in zip(trace.points[:-1], steps, strict=True) if a.u[1] < 0.0]
        assert capped
        assert max(capped) <= 0.01 + 1e-12
        assert max(steps) > 0.05

    @pytest.mark.unit
    def test_locate_zero_of_test_function(self):
        trace = _around_circle(StepSettings(h0=0.1, hmax=0.1, max_points=40))
        pairs = zip(trace.points[:-1], trace.points[1:], strict=True)
        a, b = next((a, b) for a, b in pairs if a.u[0] > 0.0 >= b.u[0])
        u = locate_on_segment(_circle(), a, b, lambda v: float(v[0]))
        np.testing.assert_allclose(u, [0.0, 1.0], atol=1e-10)


class TestEquilibriumContinuation:
    """
    Test branches of equilibria and their special points in gamma.
    """

    @pytest.mark.unit
    @pytest.mark.parametrize("rho", [0.01, 0.1, 0.25])
    def test_branch_point_at_r0_equal_one(self, params_at, rho):
        """
        The disease-free branch meets the endemic one where r0 = 1, independent of rho.
        """
        p = params_at(0.12, rho)
        branch = continue_equilibrium(p, disease_free_equilibrium(p), ActiveParam.GAMMA, (0.1, 0.2))
        bps = branch.of_kind(SpecialKind.BP)
        assert len(bps) == 1
        assert bps[0].params.gamma == pytest.approx(GAMMA_0, abs=1e-6)
        assert bps[0].params.rho == rho
        assert branch.frozen_param_value == rho

    @pytest.mark.unit
    def test_fold_and_hopf_on_the_upper_branch(self, params_at):
        p = params_at(0.3, 0.1)
        branch = continue_equilibrium(p, _endemic(p, EquilibriumLabel.E1), ActiveParam.GAMMA, (0.3, 0.42))
        lps = branch.of_kind(SpecialKind.LP)
        hbs = branch.of_kind(SpecialKind.HB)
        assert len(lps) == 1
        assert len(hbs) == 1
        assert lps[0].params.gamma == pytest.approx(FOLD_GAMMA_AT_RHO_01, abs=1e-4)
        assert hbs[0].params.gamma == pytest.approx(HOPF_GAMMA_AT_RHO_01, abs=1e-4)
        assert hbs[0].aux["omega"] == pytest.approx(hopf_frequency(hbs[0]))
        assert np.isfinite(hbs[0].aux["l1"])
        assert abs(hbs[0].aux["trace"]) < 1e-9

    @pytest.mark.unit
    def test_special_points_independent_of_direction(self, params_at):
        """
        Entering the fold from the saddle side reproduces the same special points.
        """
        p = params_at(0.3, 0.1)
        upper = continue_equilibrium(p, _endemic(p, EquilibriumLabel.E1), ActiveParam.GAMMA, (0.3, 0.42))
        lower = continue_equilibrium(p, _endemic(p, EquilibriumLabel.E2), ActiveParam.GAMMA, (0.3, 0.42))
        for kind in (SpecialKind.LP, SpecialKind.HB):
            a, b = upper.of_kind(kind)[0], lower.of_kind(kind)[0]
            assert a.params.gamma == pytest.approx(b.params.gamma, abs=1e-7)
            np.testing.assert_allclose(a.state, b.state, rtol=1e-6)

    @pytest.mark.unit
    def test_points_are_ordered_by_arclength(self, params_at):
        p = params_at(0.3, 0.1)
        branch = continue_equilibrium(p, _endemic(p, EquilibriumLabel.E1), ActiveParam.GAMMA, (0.3, 0.42))
        s = [pt.arclength for pt in branch.points]
        assert s == sorted(s)
        values = branch.values()
        assert values.min() >= 0.3 - 1e-9
        assert values.max() <= 0.42 + 1e-9

    @pytest.mark.unit
    def test_rho_as_active_parameter(self, params_at):
        p = params_at(0.392, 0.19)
        branch = continue_equilibrium(
            p, _endemic(p, EquilibriumLabel.E1), ActiveParam.RHO, (0.17, 0.192), p_scale=0.022
        )
        assert branch.active_param is ActiveParam.RHO
        assert branch.frozen_param_value == 0.392
        assert branch.of_kind(SpecialKind.LP)
        assert all(sp.params.gamma == 0.392 for sp in branch.special)

    @pytest.mark.unit
    def test_localize_special_on_stored_branch(self, params_at):
        p = params_at(0.3, 0.1)
        branch = continue_equilibrium(p, _endemic(p, EquilibriumLabel.E1), ActiveParam.GAMMA, (0.3, 0.42))
        k = next(
            k
            for k, (a, b) in enumerate(zip(branch.points[:-1], branch.points[1:], strict=True))
            if a.test_hopf * b.test_hopf < 0.0 and a.test_fold > 0.0
        )
        sp = localize_special(branch, k, SpecialKind.HB)
        assert sp.params.gamma == pytest.approx(HOPF_GAMMA_AT_RHO_01, abs=1e-4)

    @pytest.mark.unit
    def test_start_outside_range(self, params_at):
        p = params_at(0.3, 0.1)
        with pytest.raises(ContinuationError):
            continue_equilibrium(p, _endemic(p, EquilibriumLabel.E1), ActiveParam.GAMMA, (0.32, 0.42))

    @pytest.mark.unit
    def test_start_must_be_an_equilibrium(self, params_at):
        p = params_at(0.3, 0.1)
        other = params_at(0.31, 0.1)
        with pytest.raises(ContinuationError):
            continue_equilibrium(p, _endemic(other, EquilibriumLabel.E1), ActiveParam.GAMMA, (0.3, 0.42))


class TestLyapunovCoefficient:
    """
    Test the first Lyapunov coefficient on the Hopf normal form.
    """

    @staticmethod
    def _normal_form(a: float, omega: float):
        def f(x):
            r2 = x[0] ** 2 + x[1] ** 2
            return np.array([-omega * x[1] + a * x[0] * r2, omega * x[0] + a * x[1] * r2])

        return f

    @pytest.mark.unit
    @pytest.mark.parametrize("a", [1.0, -1.0])
    def test_sign_follows_cubic_coefficient(self, a):
        l1 = first_lyapunov_coefficient(self._normal_form(a, 1.0), np.zeros(2))
        assert np.sign(l1) == np.sign(a)

    @pytest.mark.unit
    def test_linear_in_cubic_coefficient(self):
        one = first_lyapunov_coefficient(self._normal_form(1.0, 1.0), np.zeros(2))
        two = first_lyapunov_coefficient(self._normal_form(2.0, 1.0), np.zeros(2))
        assert two == pytest.approx(2.0 * one, rel=1e-6)

    @pytest.mark.unit
    def test_rejects_real_spectrum(self):
        with pytest.raises(DomainError):
            first_lyapunov_coefficient(lambda x: np.array([x[0], -x[1]]), np.zeros(2))

    @pytest.mark.unit
    def test_model_estimate_is_stable_under_step_halving(self, params_at):
        p = params_at(0.3, 0.1)
        branch = continue_equilibrium(p, _endemic(p, EquilibriumLabel.E1), ActiveParam.GAMMA, (0.3, 0.42))
        hb = branch.of_kind(SpecialKind.HB)[0]
        estimate = lyapunov_l1(hb.params, hb.state, hb.aux["omega"])
        assert estimate.value == pytest.approx(hb.aux["l1"])
