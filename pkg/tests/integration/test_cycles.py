"""
Integration tests for limit cycles born at Hopf points and their families.
"""

import math

import numpy as np
import pytest
from src.epibif.contin.equilibrium import continue_equilibrium
from src.epibif.cycles.continuation import continue_cycles
from src.epibif.cycles.shooting import correct_cycle, cycle_from_hopf, floquet_multipliers
from src.epibif.models.branch import SpecialKind, SpecialPoint
from src.epibif.models.cycle import Cycle, CycleBranch, CycleStability
from src.epibif.models.state import EquilibriumLabel
from src.epibif.models.trajectory import FateKind
from src.epibif.odeflow.integrator import integrate
from src.epibif.odeflow.orbits import classify_orbit
from src.epibif.schemas.params import ActiveParam, Params
from src.epibif.system.constants import STATE_SCALE
from src.epibif.system.equilibria import endemic_equilibria


def _upper_hopf(rho: float) -> SpecialPoint:
    p = Params(gamma=0.3, rho=rho)
    e1 = next(eq for eq in endemic_equilibria(p) if eq.label is EquilibriumLabel.E1)
    return continue_equilibrium(p, e1, ActiveParam.GAMMA, (0.3, 0.42)).of_kind(SpecialKind.HB)[0]


@pytest.fixture(scope="module")
def hopf_point() -> SpecialPoint:
    return _upper_hopf(0.1)


@pytest.fixture(scope="module")
def subcritical_hopf_point() -> SpecialPoint:
    return _upper_hopf(0.16)


@pytest.fixture(scope="module")
def small_cycle(hopf_point) -> Cycle:
    return cycle_from_hopf(hopf_point, 1e-3)


@pytest.fixture(scope="module")
def family(small_cycle) -> CycleBranch:
    return continue_cycles(small_cycle, ActiveParam.GAMMA, (0.3, 0.42), max_points=60, p_scale=0.12)


class TestCycleFromHopf:
    """
    Test the small cycle found next to a Hopf point.
    """

    @pytest.mark.integration
    @pytest.mark.slow
    def test_period_matches_hopf_frequency(self, hopf_point, small_cycle):
        assert small_cycle.period == pytest.approx(2.0 * math.pi / hopf_point.aux["omega"], rel=5e-2)

    @pytest.mark.integration
    @pytest.mark.slow
    def test_trivial_multiplier(self, small_cycle):
        assert abs(small_cycle.multipliers[0] - 1.0) < 1e-4

    @pytest.mark.integration
    @pytest.mark.slow
    def test_cycle_closes(self, small_cycle):
        assert small_cycle.closure_error < 1e-5

    @pytest.mark.integration
    @pytest.mark.slow
    def test_parameter_stays_near_hopf_value(self, hopf_point, small_cycle):
        assert small_cycle.params.gamma == pytest.approx(hopf_point.params.gamma, abs=1e-3)
        assert small_cycle.params.rho == hopf_point.params.rho

    @pytest.mark.integration
    @pytest.mark.slow
    def test_recomputed_multipliers_agree(self, small_cycle):
        again = floquet_multipliers(small_cycle)
        assert abs(again[1] - small_cycle.multipliers[1]) < 1e-4


class TestCycleFamily:
    """
    Test following the family away from the Hopf point.
    """

    @pytest.mark.integration
    @pytest.mark.slow
    def test_family_grows(self, family, small_cycle):
        assert len(family.cycles) > 2
        assert max(c.amplitude_I for c in family.cycles) > small_cycle.amplitude_I

    @pytest.mark.integration
    @pytest.mark.slow
    def test_members_close_and_stay_in_range(self, family):
        for cycle in family.cycles:
            assert cycle.closure_error < 1e-5
            assert 0.3 <= cycle.params.gamma <= 0.42
            assert cycle.params.rho == 0.1

    @pytest.mark.integration
    @pytest.mark.slow
    def test_arclength_increases(self, family):
        assert family.arclength == sorted(family.arclength)

    @pytest.mark.integration
    @pytest.mark.slow
    def test_every_member_has_trivial_multiplier(self, family):
        for cycle in family.cycles:
            assert abs(cycle.multipliers[0] - 1.0) < 1e-4, cycle.period


class TestHopfCriticality:
    """
    Test that the sign of l1 decides the stability of the cycle born at the Hopf point.
    """

    @pytest.mark.integration
    @pytest.mark.slow
    def test_supercritical_hopf_gives_stable_cycle(self, hopf_point, small_cycle):
        assert hopf_point.aux["l1"] < 0.0
        assert small_cycle.stability is CycleStability.STABLE

    @pytest.mark.integration
    @pytest.mark.slow
    def test_subcritical_hopf_gives_unstable_cycle(self, subcritical_hopf_point):
        """
        Past the generalized Hopf point on the upper branch, rho = 0.16 has l1 > 0.
        """
        assert subcritical_hopf_point.params.gamma == pytest.approx(0.3843, abs=1e-3)
        assert subcritical_hopf_point.aux["l1"] > 0.0
        cycle = cycle_from_hopf(subcritical_hopf_point)
        assert cycle.stability is CycleStability.UNSTABLE


class TestCycleAndOrbitAgree:
    """
    Test that a cycle found by shooting is recognised as an attractor by orbit classification.
    """

    @pytest.mark.integration
    @pytest.mark.slow
    def test_orbit_started_on_stable_cycle(self, preset):
        p = preset("P7")
        e1 = next(eq for eq in endemic_equilibria(p) if eq.label is EquilibriumLabel.E1)
        times = np.linspace(14000.0, 14400.0, 2001)
        traj = integrate(p, e1.state.as_array()[:2] + np.array([0.0, 0.5]), 14400.0, t_eval=times)
        top = traj.sample_states[int(np.argmax(traj.sample_states[:, 1]))]
        cycle = correct_cycle(p, (top / STATE_SCALE)[None, :], 163.0)
        assert cycle.stability is CycleStability.STABLE
        assert cycle.period == pytest.approx(163.04, rel=1e-2)

        fate = classify_orbit(p, cycle.mesh[0], budget=2000.0)
        assert fate.kind is FateKind.TO_CYCLE
        assert fate.period == pytest.approx(cycle.period, rel=1e-3)
