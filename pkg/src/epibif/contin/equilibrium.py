"""One-parameter continuation of equilibria of the planar system.

Unknowns are ``u = (S/1000, I/40, p/p_scale)``. Along the branch the fold test
``det J`` and the Hopf test ``trace J`` are recorded; sign changes are
localized on the curve and polished on the augmented defining system.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np
from numpy.typing import NDArray

from ..core.exceptions import ContinuationError, ConvergenceError, DomainError
from ..core.numerics import eigvals_small, newton
from ..models.branch import Branch, BranchPoint, SpecialKind, SpecialPoint
from ..models.state import EquilibriumPoint
from ..schemas.params import ActiveParam, Params
from ..system.constants import STATE_SCALE
from ..system.vector_field import (
    jacobian_reduced,
    jacobian_sensitivity,
    parameter_derivative,
    rhs_reduced,
)
from ..codim2.lyapunov import lyapunov_l1
from .arclength import (
    ArcPoint,
    ContinuationProblem,
    StepFilter,
    StepSettings,
    locate_on_segment,
    trace_branch,
)

logger = logging.getLogger(__name__)

START_RESIDUAL_TOL = 1e-10
I_FLOOR = -1e-9


@dataclass(frozen=True)
class EquilibriumSystem:
    """Scaled equilibrium equations at fixed ``params`` with one parameter free."""

    params: Params
    active: ActiveParam
    p_scale: float = 1.0
    lo: float = 0.0
    hi: float = 1.0

    def to_u(self, state: NDArray[np.float64], value: float) -> NDArray[np.float64]:
        return np.array([state[0] / STATE_SCALE[0], state[1] / STATE_SCALE[1], value / self.p_scale])

    def state_of(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        return u[:2] * STATE_SCALE

    def params_of(self, u: NDArray[np.float64]) -> Params:
        return self.params.with_value(self.active, float(u[2] * self.p_scale))

    def residual(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        return rhs_reduced(self.state_of(u), self.params_of(u))

    def jacobian(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        x, p = self.state_of(u), self.params_of(u)
        jac = np.empty((2, 3))
        jac[:, :2] = jacobian_reduced(x, p) * STATE_SCALE[None, :]
        jac[:, 2] = parameter_derivative(x, p, self.active) * self.p_scale
        return jac

    def in_domain(self, u: NDArray[np.float64]) -> bool:
        value = u[2] * self.p_scale
        span = self.hi - self.lo
        in_range = self.lo - 1e-12 * span <= value <= self.hi + 1e-12 * span
        return bool(in_range and u[0] > 0 and u[1] * STATE_SCALE[1] >= I_FLOOR)

    def problem(self) -> ContinuationProblem:
        return ContinuationProblem(self.residual, self.jacobian, self.in_domain)

    def fold_test(self, u: NDArray[np.float64]) -> float:
        return float(np.linalg.det(jacobian_reduced(self.state_of(u), self.params_of(u))))

    def hopf_test(self, u: NDArray[np.float64]) -> float:
        return float(np.trace(jacobian_reduced(self.state_of(u), self.params_of(u))))

    def test_gradient(self, u: NDArray[np.float64], kind: SpecialKind) -> NDArray[np.float64]:
        sens = jacobian_sensitivity(self.state_of(u), self.params_of(u))
        grad = sens.det_gradient() if kind is SpecialKind.LP else sens.trace_gradient()
        k = 2 if self.active is ActiveParam.GAMMA else 3
        return np.array([grad[0] * STATE_SCALE[0], grad[1] * STATE_SCALE[1], grad[k] * self.p_scale])


def _branch_point(system: EquilibriumSystem, u: NDArray[np.float64], s: float) -> BranchPoint:
    x, p = system.state_of(u), system.params_of(u)
    jac = jacobian_reduced(x, p)
    eigs = eigvals_small(jac)
    return BranchPoint(
        state=x,
        params=p,
        active_param=system.active,
        test_fold=float(np.linalg.det(jac)),
        test_hopf=float(np.trace(jac)),
        eigenvalues=(eigs[0], eigs[1]),
        arclength=s,
    )


def _polish(system: EquilibriumSystem, u: NDArray[np.float64], kind: SpecialKind) -> NDArray[np.float64]:
    test = system.fold_test if kind is SpecialKind.LP else system.hopf_test

    def G(z: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.append(system.residual(z), test(z))

    def JG(z: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.vstack([system.jacobian(z), system.test_gradient(z, kind)[None, :]])

    report = newton(G, JG, u, tol=1e-12, max_iter=20)
    if report.converged:
        return report.root
    logger.debug(
        "Augmented %s polish did not converge (%.3g); keeping bracketed point", kind.value, report.residual_norm
    )
    return u


def frequency_from_jacobian(jac: NDArray[np.float64]) -> float:
    det = float(np.linalg.det(jac))
    if det <= 0.0:
        raise DomainError("det J <= 0: not a proper Hopf point (Bogdanov-Takens degenerate).", {"det": det})
    return math.sqrt(det)


def hopf_frequency(sp: SpecialPoint) -> float:
    """Angular frequency ``sqrt(det J)`` at a planar Hopf point."""
    if sp.kind is not SpecialKind.HB:
        raise DomainError("hopf_frequency expects an HB point.", {"kind": sp.kind.value})
    return frequency_from_jacobian(jacobian_reduced(sp.state, sp.params))


def _special(
    system: EquilibriumSystem, kind: SpecialKind, u: NDArray[np.float64], s_a: float, s_b: float, frac: float
) -> SpecialPoint:
    x, p = system.state_of(u), system.params_of(u)
    jac = jacobian_reduced(x, p)
    aux: dict[str, float] = {"det": float(np.linalg.det(jac)), "trace": float(np.trace(jac))}
    if kind is SpecialKind.HB:
        omega = frequency_from_jacobian(jac)
        aux["omega"] = omega
        estimate = lyapunov_l1(p, x, omega)
        aux["l1"] = estimate.value
        aux["l1_flagged"] = float(estimate.flagged)
    return SpecialPoint(
        kind=kind,
        params=p,
        state=x,
        aux=aux,
        arclength=s_a + frac * (s_b - s_a),
        active_param=system.active,
    )


def _localize(system: EquilibriumSystem, a: ArcPoint, b: ArcPoint, kind: SpecialKind) -> SpecialPoint:
    problem = system.problem()
    test = system.hopf_test if kind is SpecialKind.HB else system.fold_test
    u = locate_on_segment(problem, a, b, test)
    if kind in (SpecialKind.LP, SpecialKind.HB):
        u = _polish(system, u, kind)
    chord = float(np.linalg.norm(b.u - a.u))
    frac = min(1.0, max(0.0, float(np.linalg.norm(u - a.u)) / chord)) if chord > 0 else 0.0
    sp = _special(system, kind, u, a.s, b.s, frac)
    logger.info(
        "%s at %s=%.9g (gamma=%.9g, rho=%.9g)",
        kind.value,
        system.active.value,
        sp.params.value(system.active),
        sp.params.gamma,
        sp.params.rho,
    )
    return sp


def _scan_segment(system: EquilibriumSystem, a: ArcPoint, b: ArcPoint) -> list[SpecialPoint]:
    found: list[SpecialPoint] = []
    det_a, det_b = system.fold_test(a.u), system.fold_test(b.u)
    tr_a, tr_b = system.hopf_test(a.u), system.hopf_test(b.u)
    if det_a * det_b < 0.0:
        kind = SpecialKind.LP if a.tangent[2] * b.tangent[2] < 0.0 else SpecialKind.BP
        found.append(_localize(system, a, b, kind))
    if tr_a * tr_b < 0.0 and (det_a > 0.0 or det_b > 0.0):
        try:
            sp = _localize(system, a, b, SpecialKind.HB)
        except DomainError:
            logger.debug("Trace sign change at a neutral saddle ignored")
        else:
            found.append(sp)
    return found


def _both_tests_flip(system: EquilibriumSystem) -> StepFilter:
    def step_filter(prev: ArcPoint, u_new: NDArray[np.float64]) -> bool:
        flips_det = system.fold_test(prev.u) * system.fold_test(u_new) < 0.0
        flips_tr = system.hopf_test(prev.u) * system.hopf_test(u_new) < 0.0
        return not (flips_det and flips_tr)

    return step_filter


def continue_equilibrium(
    p: Params,
    start: EquilibriumPoint,
    active: ActiveParam,
    param_range: tuple[float, float],
    h0: float = 1e-3,
    hmax: float = 1e-2,
    *,
    max_points: int = 2000,
    p_scale: float = 1.0,
    directions: tuple[int, ...] = (1, -1),
) -> Branch:
    """Trace the equilibrium through ``start`` while ``active`` varies in ``param_range``.

    Both directions are followed by default and joined into one branch ordered
    by arclength, the start at ``s = 0``.

    Raises
    ------
    ContinuationError
        If the start is not an equilibrium to ``1e-10`` or the corrector fails
        at the very first step in every direction.
    """
    lo, hi = sorted(param_range)
    base = p
    value0 = base.value(active)
    if not lo <= value0 <= hi:
        raise ContinuationError("Start lies outside the continuation range.", {"value": value0, "range": [lo, hi]})
    x0 = start.state.as_array()[:2]
    residual = float(np.max(np.abs(rhs_reduced(x0, base))))
    if residual > START_RESIDUAL_TOL:
        raise ContinuationError("Start is not an equilibrium of the system.", {"residual": residual})

    system = EquilibriumSystem(base, active, p_scale, lo, hi)
    problem = system.problem()
    settings = StepSettings(h0=h0, hmax=hmax, max_points=max_points)
    u0 = system.to_u(x0, value0)
    e_p = np.array([0.0, 0.0, 1.0])

    halves: dict[int, list[ArcPoint]] = {}
    truncated = False
    for sign in directions:
        trace = trace_branch(problem, u0, sign * e_p, settings, step_filter=_both_tests_flip(system))
        truncated = truncated or trace.truncated
        halves[sign] = trace.points
    if all(len(points) <= 1 for points in halves.values()) and truncated:
        raise ContinuationError("Corrector failed at the first step.", {"u0": u0.tolist()})

    backward = [ArcPoint(pt.u, -pt.tangent, -pt.s) for pt in reversed(halves.get(-1, [])[1:])]
    if 1 in halves:
        forward = halves[1]
    else:
        forward = [ArcPoint(u0, -halves[-1][0].tangent, 0.0)]
    arc = backward + forward

    special: list[SpecialPoint] = []
    for a, b in zip(arc[:-1], arc[1:], strict=True):
        try:
            special.extend(_scan_segment(system, a, b))
        except ConvergenceError as exc:
            logger.warning("Localization failed between s=%.6g and s=%.6g: %s", a.s, b.s, exc.message)

    points = [_branch_point(system, pt.u, pt.s) for pt in arc]
    logger.info(
        "Equilibrium branch in %s: %d points, %d special points%s",
        active.value,
        len(points),
        len(special),
        " (truncated)" if truncated else "",
    )
    return Branch(
        points=points,
        special=special,
        active_param=active,
        frozen_param_value=base.value(active.other),
        truncated=truncated,
    )


def localize_special(branch: Branch, index: int, kind: SpecialKind, p_scale: float = 1.0) -> SpecialPoint:
    """Localize a special point between ``branch.points[index]`` and ``[index + 1]``.

    Raises
    ------
    ConvergenceError
        If the relevant test function does not change sign or the corrector
        fails; the bracket is attached to the error.
    """
    if kind not in (SpecialKind.LP, SpecialKind.HB, SpecialKind.BP):
        raise DomainError("Only LP, HB and BP are localized on equilibrium branches.", {"kind": kind.value})
    a_pt, b_pt = branch.points[index], branch.points[index + 1]
    values = branch.values()
    system = EquilibriumSystem(a_pt.params, branch.active_param, p_scale, float(values.min()), float(values.max()))
    a = ArcPoint(system.to_u(a_pt.state, a_pt.active_param_value), np.zeros(3), a_pt.arclength)
    b = ArcPoint(system.to_u(b_pt.state, b_pt.active_param_value), np.zeros(3), b_pt.arclength)
    return _localize(system, a, b, kind)
