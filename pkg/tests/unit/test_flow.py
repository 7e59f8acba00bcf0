"""
Unit tests for time integration, orbit fates and saddle manifolds.
"""

import numpy as np
import pytest
from src.epibif.core.exceptions import DomainError
from src.epibif.models.state import EquilibriumLabel, Stability
from src.epibif.models.trajectory import FateKind, OrbitFate
from src.epibif.odeflow.integrator import integrate, integrate_flow
from src.epibif.odeflow.manifolds import saddle_manifolds
from src.epibif.odeflow.orbits import MAX_GRID, classify_orbit, phase_portrait
from src.epibif.schemas.params import Params
from src.epibif.system.constants import STATE_SCALE
from src.epibif.system.equilibria import all_equilibria, disease_free_equilibrium, endemic_equilibria


def _endemic(p, label):
    return next(eq for eq in endemic_equilibria(p) if eq.label is label)


class TestIntegrateFlow:
    """
    Test the embedded Runge-Kutta driver on problems with known solutions.
    """

    @pytest.mark.unit
    def test_exponential_decay(self):
        flow = integrate_flow(lambda t, y: -y, [1.0], (0.0, 1.0), 1e-10, 1e-12)
        assert flow.y_end[0] == pytest.approx(np.exp(-1.0), rel=1e-8)
        assert flow.t_end == pytest.approx(1.0)

    @pytest.mark.unit
    def test_backward_time(self):
        flow = integrate_flow(lambda t, y: -y, [np.exp(-1.0)], (1.0, 0.0), 1e-10, 1e-12)
        assert flow.y_end[0] == pytest.approx(1.0, rel=1e-8)

    @pytest.mark.unit
    def test_dense_samples(self):
        flow = integrate_flow(lambda t, y: -y, [1.0], (0.0, 2.0), 1e-10, 1e-12, t_eval=[0.5, 1.0, 1.5])
        np.testing.assert_allclose(flow.eval_times, [0.5, 1.0, 1.5])
        np.testing.assert_allclose(flow.eval_states[:, 0], np.exp(-flow.eval_times), rtol=1e-7)

    @pytest.mark.unit
    def test_decreasing_events_on_oscillator(self):
        """
        ``y0 = cos t`` falls through zero at pi/2 and 5 pi/2 only.
        """

        def rotation(_t, y):
            return np.array([y[1], -y[0]])

        flow = integrate_flow(
            rotation, [1.0, 0.0], (0.0, 10.0), 1e-10, 1e-12, event=lambda t, y: y[0], event_direction=-1
        )
        np.testing.assert_allclose(flow.event_times, [np.pi / 2, 5 * np.pi / 2], atol=1e-7)

    @pytest.mark.unit
    def test_terminate_stops_early(self):
        flow = integrate_flow(lambda t, y: np.ones(1), [0.0], (0.0, 100.0), terminate=lambda t, y: y[0] > 3.0)
        assert flow.terminated
        assert flow.t_end < 100.0

    @pytest.mark.unit
    def test_rejects_non_finite_start(self):
        with pytest.raises(DomainError):
            integrate_flow(lambda t, y: -y, [np.nan], (0.0, 1.0))

    @pytest.mark.unit
    def test_rejects_backward_events(self):
        with pytest.raises(DomainError):
            integrate_flow(lambda t, y: -y, [1.0], (1.0, 0.0), event=lambda t, y: y[0])


class TestIntegrateModel:
    """
    Test orbits of the epidemic model.
    """

    @pytest.mark.unit
    def test_population_law_without_disease_deaths(self):
        """
        With negligible disease mortality N(t) = lambda/mu + (N0 - lambda/mu) exp(-mu t).
        """
        p = Params(mu_prime=1e-12, gamma=0.3, rho=0.1)
        x0 = np.array([500.0, 10.0, 5.0])
        times = [50.0, 100.0, 200.0]
        traj = integrate(p, x0, 200.0, 1e-10, 1e-10, t_eval=times)
        N = traj.sample_states.sum(axis=1)
        carrying = p.lambda_ / p.mu
        expected = carrying + (x0.sum() - carrying) * np.exp(-p.mu * np.asarray(times))
        np.testing.assert_allclose(N, expected, rtol=1e-7)

    @pytest.mark.unit
    def test_planar_start_uses_reduced_system(self, preset):
        traj = integrate(preset("P1"), [900.0, 5.0], 10.0)
        assert traj.states.shape[1] == 2
        assert traj.final_state[0] > 0.0

    @pytest.mark.unit
    def test_rejects_negative_state(self, default_params):
        with pytest.raises(DomainError):
            integrate(default_params, [-1.0, 2.0], 10.0)

    @pytest.mark.unit
    def test_rejects_tolerance_out_of_range(self, default_params):
        with pytest.raises(DomainError):
            integrate(default_params, [900.0, 2.0], 10.0, rel_tol=1e-1)

    @pytest.mark.unit
    @pytest.mark.parametrize("x0", [[0.0, 0.0], [0.0, 50.0], [1000.0, 0.0], [900.0, 1.0], [50.0, 80.0]])
    def test_orbits_stay_nonnegative(self, preset, x0):
        abs_tol = 1e-10
        traj = integrate(preset("P1"), x0, 2000.0, 1e-8, abs_tol)
        assert traj.states.min() >= -10.0 * abs_tol
        assert np.all(np.isfinite(traj.states))


class TestClassifyOrbit:
    """
    Test omega-limit recognition.
    """

    @pytest.mark.unit
    def test_disease_free_axis_goes_to_e0(self, preset):
        fate = classify_orbit(preset("P1"), [999.0, 0.0])
        assert fate.kind is FateKind.TO_EQUILIBRIUM
        assert fate.label is EquilibriumLabel.E0

    @pytest.mark.unit
    def test_start_on_stable_endemic_state(self, preset):
        p = preset("P1")
        e1 = next(eq for eq in endemic_equilibria(p) if eq.label is EquilibriumLabel.E1)
        fate = classify_orbit(p, e1.state.as_array() + np.array([1e-4, 0.0]))
        assert fate.tag == "E1"
        assert fate.transient_time == 0.0

    @pytest.mark.unit
    def test_tiny_budget_is_undecided(self, preset):
        fate = classify_orbit(preset("P1"), [500.0, 30.0], budget=1.0)
        assert fate.kind is FateKind.UNDECIDED
        assert fate.tag == "undecided"

    @pytest.mark.unit
    def test_rejects_negative_start(self, default_params):
        with pytest.raises(DomainError):
            classify_orbit(default_params, [10.0, -1.0])

    @pytest.mark.unit
    def test_fate_tags(self):
        assert OrbitFate(FateKind.TO_CYCLE, period=40.0, mean_I=3.0).tag == "cycle"
        assert OrbitFate(FateKind.TO_EQUILIBRIUM, label=EquilibriumLabel.E2).tag == "E2"

    @pytest.mark.unit
    @pytest.mark.slow
    def test_orbit_leaving_unstable_focus_reaches_cycle(self, preset):
        """
        At P7 the upper endemic state is an unstable focus surrounded by a stable cycle of period about 163.
        """
        p = preset("P7")
        e1 = _endemic(p, EquilibriumLabel.E1)
        assert e1.stability is Stability.UNSTABLE_SPIRAL
        fate = classify_orbit(p, e1.state.as_array()[:2] + np.array([0.0, 0.5]), budget=20000.0)
        assert fate.kind is FateKind.TO_CYCLE
        assert fate.period == pytest.approx(163.04, rel=1e-2)
        assert fate.transient_time > 0.0
        assert fate.mean_I > 0.0

    @pytest.mark.unit
    @pytest.mark.slow
    def test_inside_the_homoclinic_loop_goes_to_e1(self, preset):
        """
        P2 sits on the homoclinic loop and e1 is a weak focus, so the spiral takes close to 19000 time units.

        The default budget of 10000 leaves this orbit undecided.
        """
        p = preset("P2")
        e1 = _endemic(p, EquilibriumLabel.E1)
        fate = classify_orbit(p, e1.state.as_array()[:2] + np.array([0.0, 0.5]), budget=30000.0)
        assert fate.kind is FateKind.TO_EQUILIBRIUM
        assert fate.label is EquilibriumLabel.E1

    @pytest.mark.unit
    def test_outside_the_homoclinic_loop_goes_to_e0(self, preset):
        fate = classify_orbit(preset("P2"), [900.0, 1.0], budget=30000.0)
        assert fate.kind is FateKind.TO_EQUILIBRIUM
        assert fate.label is EquilibriumLabel.E0


class TestPhasePortrait:
    """
    Test the grid of orbit fates.
    """

    @pytest.mark.unit
    def test_single_attractor_everywhere(self, preset):
        """
        Beyond the fold only the disease-free state remains, so every cell ends there.
        """
        field = phase_portrait(preset("P5"), (100.0, 1000.0, 0.0, 10.0), (2, 2))
        cells = field.cells()
        assert [(i, j) for i, j, *_ in cells] == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert {fate.tag for *_, fate in cells} == {"E0"}
        assert len(field.decided()) == 4

    @pytest.mark.unit
    def test_grid_limits(self, default_params):
        with pytest.raises(DomainError):
            phase_portrait(default_params, grid=(MAX_GRID + 1, 2))

    @pytest.mark.unit
    def test_window_must_be_nonnegative(self, default_params):
        with pytest.raises(DomainError):
            phase_portrait(default_params, window=(-1.0, 10.0, 0.0, 5.0), grid=(2, 2))

    @pytest.mark.unit
    @pytest.mark.slow
    def test_bistable_basins(self, preset):
        """
        At P1 low-prevalence corners die out while the corner beside e1 spirals into it.

        Halving the integration tolerance leaves every decided cell unchanged.
        """
        p = preset("P1")
        e1 = _endemic(p, EquilibriumLabel.E1)
        window = (e1.state.S - 0.5, 990.0, 1.0, e1.state.I + 0.5)
        field = phase_portrait(p, window, (2, 2), budget=20000.0)
        assert field.fates[0][0].tag == "E0"
        assert field.fates[0][1].tag == "E1"
        assert field.fates[1][0].tag == "E0"

        finer = phase_portrait(p, window, (2, 2), budget=20000.0, rel_tol=5e-9)
        for (i, j, _s, _i, fate), (*_, again) in zip(field.cells(), finer.cells(), strict=True):
            if fate.kind is FateKind.TO_EQUILIBRIUM and again.kind is FateKind.TO_EQUILIBRIUM:
                assert fate.label is again.label, (i, j)


class TestSaddleManifolds:
    """
    Test stable and unstable separatrices of the middle endemic state.
    """

    @pytest.mark.unit
    def test_unstable_branches_split_between_attractors(self, preset):
        p = preset("P1")
        e2 = next(eq for eq in endemic_equilibria(p) if eq.label is EquilibriumLabel.E2)
        assert e2.stability is Stability.SADDLE
        branches = saddle_manifolds(e2, "unstable")
        assert [b.side for b in branches] == [1, -1]
        assert all(b.kind == "unstable" for b in branches)
        np.testing.assert_allclose(branches[0].points[0], e2.state.as_array())
        e0 = disease_free_equilibrium(p).state.as_array()
        ends = [float(np.max(np.abs((b.points[-1] - e0) / STATE_SCALE))) for b in branches]
        assert min(ends) < 1e-3

    @pytest.mark.unit
    def test_both_gives_four_branches(self, preset):
        e2 = min(endemic_equilibria(preset("P1")), key=lambda eq: eq.state.I)
        assert len(saddle_manifolds(e2, "both", t_max=50.0)) == 4

    @pytest.mark.unit
    def test_non_saddle_rejected(self, preset):
        e0 = all_equilibria(preset("P1"))[0]
        with pytest.raises(DomainError):
            saddle_manifolds(e0)
