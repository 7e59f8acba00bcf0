"""
Unit tests for equilibrium computation and classification.
"""

import numpy as np
import pytest
from src.epibif.core.numerics import newton
from src.epibif.models.state import EquilibriumLabel, Stability
from src.epibif.schemas.params import Params
from src.epibif.system.constants import GAMMA_0, RHO_0, STATE_SCALE
from src.epibif.system.equilibria import (
    all_equilibria,
    backward_threshold_rho,
    classify_eigenvalues,
    disease_free_equilibrium,
    endemic_equilibria,
    is_backward,
)
from src.epibif.system.vector_field import jacobian_reduced, rhs_reduced

from tests.helpers.generators import random_params


def _multistart_endemic_states(p: Params) -> list[np.ndarray]:
    """
    Endemic states found by Newton from many starts, sorted by ``I``.

    Starts lie on the infection nullcline ``S(I)`` over a log grid of ``I``,
    plus a coarse grid over the positive quadrant.
    """
    I = np.geomspace(1e-2, 100.0, 200)
    removal = p.mu + p.mu_prime + p.alpha / (1.0 + p.rho * I)
    denom = p.beta - p.gamma * removal
    on_nullcline = [np.array([r / d, i]) for r, d, i in zip(removal, denom, I, strict=True) if d > 0.0]
    grid = [np.array([s, i]) for s in np.linspace(1.0, 1000.0, 6) for i in np.linspace(1.0, 100.0, 6)]

    roots: list[np.ndarray] = []
    for x0 in on_nullcline + grid:
        report = newton(lambda x: rhs_reduced(x, p), lambda x: jacobian_reduced(x, p), x0, tol=1e-11, max_iter=50)
        x = report.root
        if not report.converged or x[0] <= 0.0 or x[1] <= 1e-6:
            continue
        if all(np.max(np.abs((x - y) / STATE_SCALE)) > 1e-6 for y in roots):
            roots.append(x)
    return sorted(roots, key=lambda x: x[1])


class TestDiseaseFree:
    """
    Test the disease-free equilibrium.
    """

    @pytest.mark.unit
    def test_location_and_r0(self, default_params):
        eq = disease_free_equilibrium(default_params)
        assert eq.label is EquilibriumLabel.E0
        assert eq.state.S == pytest.approx(1000.0)
        assert eq.state.I == 0.0
        assert eq.extra["r0"] == pytest.approx(161.29, abs=1e-2)

    @pytest.mark.unit
    def test_unstable_above_threshold(self, default_params):
        assert disease_free_equilibrium(default_params).stability is Stability.SADDLE

    @pytest.mark.unit
    def test_stable_below_threshold(self, preset):
        assert disease_free_equilibrium(preset("P1")).stability is Stability.STABLE_NODE


class TestEndemic:
    """
    Test endemic equilibria on the scenario presets.
    """

    @pytest.mark.unit
    def test_two_states_in_the_bistable_region(self, preset):
        """
        The higher-I state is E1 and is stable; the lower one is a saddle.
        """
        endemic = endemic_equilibria(preset("P1"))
        assert [eq.label for eq in endemic] == [EquilibriumLabel.E2, EquilibriumLabel.E1]
        assert endemic[0].state.I < endemic[1].state.I
        assert endemic[0].stability is Stability.SADDLE
        assert endemic[1].stability.is_stable

    @pytest.mark.unit
    @pytest.mark.parametrize("preset_id", ["P5", "P9"])
    def test_none_beyond_the_fold(self, preset, preset_id):
        assert endemic_equilibria(preset(preset_id)) == []

    @pytest.mark.unit
    @pytest.mark.parametrize("preset_id", ["P1", "P7", "P13", "P15"])
    def test_residuals_are_small(self, preset, preset_id):
        for eq in all_equilibria(preset(preset_id)):
            assert eq.residual <= 1e-8
            assert np.max(np.abs(rhs_reduced(eq.state.as_array(), eq.params))) <= 1e-8
            assert eq.state.is_nonnegative

    @pytest.mark.unit
    def test_single_state_without_behavioural_terms(self, default_params):
        endemic = endemic_equilibria(default_params)
        assert len(endemic) == 1
        assert endemic[0].label is EquilibriumLabel.E1

    @pytest.mark.unit
    def test_full_system_adds_recovered_and_mu_eigenvalue(self, preset):
        p = preset("P1")
        for eq in endemic_equilibria(p, full=True):
            expected_R = p.alpha * eq.state.I / (p.mu * (1.0 + p.rho * eq.state.I))
            assert eq.state.R == pytest.approx(expected_R, rel=1e-12)
            assert len(eq.eigenvalues) == 3
            assert any(abs(z + p.mu) <= 1e-9 for z in eq.eigenvalues)

    @pytest.mark.unit
    @pytest.mark.property
    def test_agrees_with_multistart_newton(self, rng):
        """
        Counts and states match Newton from many starts on random parameters over the diagram window.
        """
        for p in random_params(rng, 50, gamma_box=(GAMMA_0, 0.42), rho_box=(RHO_0, 0.27)):
            ours = [eq.state.as_array()[:2] for eq in endemic_equilibria(p)]
            found = _multistart_endemic_states(p)
            assert len(ours) == len(found), (p.gamma, p.rho)
            for a, b in zip(ours, found, strict=True):
                assert np.max(np.abs((a - b) / STATE_SCALE)) <= 1e-8, (p.gamma, p.rho)


class TestBackwardThreshold:
    """
    Test the forward/backward switch of the transcritical point.
    """

    @pytest.mark.unit
    def test_threshold_at_default_rates(self, default_params):
        assert backward_threshold_rho(default_params) == pytest.approx(RHO_0, rel=1e-12)
        assert backward_threshold_rho(default_params) == pytest.approx(2.9791e-4, rel=1e-9)

    @pytest.mark.unit
    @pytest.mark.parametrize(("rho", "backward"), [(0.0, False), (2e-4, False), (4e-4, True), (0.19, True)])
    def test_is_backward(self, params_at, rho, backward):
        assert is_backward(params_at(0.2, rho)) is backward


class TestClassifyEigenvalues:
    """
    Test the stability labels assigned to planar spectra.
    """

    @pytest.mark.unit
    @pytest.mark.parametrize(
        ("eigs", "expected"),
        [
            ((complex(-1, 0), complex(-2, 0)), Stability.STABLE_NODE),
            ((complex(-1, 1), complex(-1, -1)), Stability.STABLE_SPIRAL),
            ((complex(-1, 0), complex(2, 0)), Stability.SADDLE),
            ((complex(1, 0), complex(2, 0)), Stability.UNSTABLE_NODE),
            ((complex(0.5, 1), complex(0.5, -1)), Stability.UNSTABLE_SPIRAL),
            ((complex(0, 1), complex(0, -1)), Stability.NON_HYPERBOLIC),
        ],
    )
    def test_labels(self, eigs, expected):
        assert classify_eigenvalues(eigs, tol=1e-10) is expected
