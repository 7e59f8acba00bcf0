"""
Integration tests for the fold and Hopf curves in the (gamma, rho) plane.
"""

import pytest
from src.epibif.codim2.curves import continue_fold_curve, continue_hopf_curve
from src.epibif.contin.equilibrium import continue_equilibrium
from src.epibif.models.branch import Codim2Curve, CurveKind, SpecialKind, SpecialPoint
from src.epibif.models.state import EquilibriumLabel
from src.epibif.schemas.params import ActiveParam, Params
from src.epibif.system.equilibria import endemic_equilibria

BT_POINTS = [(0.404023, 0.229494), (0.164201, 0.002600)]
GH_POINTS = [(0.372814, 0.134955), (0.163907, 0.002496)]
LOCATION_TOL = 1e-3


@pytest.fixture(scope="module")
def seeds() -> dict[SpecialKind, SpecialPoint]:
    p = Params(gamma=0.3, rho=0.1)
    e1 = next(eq for eq in endemic_equilibria(p) if eq.label is EquilibriumLabel.E1)
    branch = continue_equilibrium(p, e1, ActiveParam.GAMMA, (0.3, 0.42))
    return {kind: branch.of_kind(kind)[0] for kind in (SpecialKind.LP, SpecialKind.HB)}


@pytest.fixture(scope="module")
def fold_curve(seeds) -> Codim2Curve:
    return continue_fold_curve(seeds[SpecialKind.LP])


@pytest.fixture(scope="module")
def hopf_curve(seeds) -> Codim2Curve:
    return continue_hopf_curve(seeds[SpecialKind.HB])


def _matched(target: tuple[float, float], found: list[SpecialPoint]) -> bool:
    return any(
        abs(sp.params.gamma - target[0]) <= LOCATION_TOL and abs(sp.params.rho - target[1]) <= LOCATION_TOL
        for sp in found
    )


class TestFoldCurve:
    """
    Test the curve of saddle-node points.
    """

    @pytest.mark.integration
    @pytest.mark.slow
    def test_curve_passes_through_seed(self, fold_curve, seeds):
        assert fold_curve.kind is CurveKind.FOLD
        gamma, rho = seeds[SpecialKind.LP].location
        assert any(abs(pt.gamma - gamma) < 1e-6 and abs(pt.rho - rho) < 1e-6 for pt in fold_curve.points)

    @pytest.mark.integration
    @pytest.mark.slow
    def test_points_solve_defining_system(self, fold_curve):
        assert max(pt.residual for pt in fold_curve.points) < 1e-7

    @pytest.mark.integration
    @pytest.mark.slow
    def test_only_bogdanov_takens_points_are_reported(self, fold_curve):
        assert {sp.kind for sp in fold_curve.special} <= {SpecialKind.BT}


class TestHopfCurve:
    """
    Test the Hopf curve and its codimension-two points.
    """

    @pytest.mark.integration
    @pytest.mark.slow
    @pytest.mark.parametrize("target", BT_POINTS)
    def test_bogdanov_takens_points_on_each_curve(self, fold_curve, hopf_curve, target):
        assert _matched(target, fold_curve.of_kind(SpecialKind.BT))
        assert _matched(target, hopf_curve.of_kind(SpecialKind.BT))

    @pytest.mark.integration
    @pytest.mark.slow
    def test_fold_and_hopf_curves_agree_on_bogdanov_takens_points(self, fold_curve, hopf_curve):
        on_fold = sorted(sp.location for sp in fold_curve.of_kind(SpecialKind.BT))
        on_hopf = sorted(sp.location for sp in hopf_curve.of_kind(SpecialKind.BT))
        assert len(on_fold) == len(on_hopf) == len(BT_POINTS)
        for (g_fold, r_fold), (g_hopf, r_hopf) in zip(on_fold, on_hopf, strict=True):
            assert abs(g_fold - g_hopf) <= LOCATION_TOL
            assert abs(r_fold - r_hopf) <= LOCATION_TOL

    @pytest.mark.integration
    @pytest.mark.slow
    @pytest.mark.parametrize("target", GH_POINTS)
    def test_generalised_hopf_points(self, hopf_curve, target):
        assert _matched(target, hopf_curve.of_kind(SpecialKind.GH))

    @pytest.mark.integration
    @pytest.mark.slow
    def test_points_solve_defining_system(self, hopf_curve):
        assert max(pt.residual for pt in hopf_curve.points) < 1e-7

    @pytest.mark.integration
    @pytest.mark.slow
    def test_first_lyapunov_coefficient_changes_sign(self, hopf_curve):
        signs = {pt.l1 > 0 for pt in hopf_curve.points if pt.l1 is not None}
        assert signs == {True, False}
