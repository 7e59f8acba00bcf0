"""Fold and Hopf curves in the ``(gamma, rho)`` plane.

Both curves are solutions of three equations in ``u = (S/1000, I/40, gamma, rho)``:
the planar equilibrium conditions plus ``det J = 0`` (fold) or ``trace J = 0``
(Hopf). Gradients of the scalar conditions come from Jacobi's formula via
:func:`~epibif.system.vector_field.jacobian_sensitivity`.
"""

from dataclasses import dataclass
import logging
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..contin.arclength import (
    ArcPoint,
    ContinuationProblem,
    StepFilter,
    StepSettings,
    StopRule,
    correct,
    locate_on_segment,
    tangent_at,
    trace_branch,
)
from ..core.exceptions import ContinuationError, ConvergenceError, DomainError, SingularMatrixError
from ..core.numerics import eigvals_small, newton
from ..models.branch import Codim2Curve, CurveKind, CurvePoint, SpecialKind, SpecialPoint
from ..schemas.params import ActiveParam, Params
from ..system.constants import STATE_SCALE
from ..system.vector_field import (
    jacobian_reduced,
    jacobian_sensitivity,
    parameter_derivative,
    rhs_reduced,
)
from .lyapunov import lyapunov_l1

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

SEED_TOL = 1e-9
BT_TOL = 1e-11
DET_DROP_LIMIT = 0.25
DEFAULT_BOUNDS: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
_U_SCALE = np.array([STATE_SCALE[0], STATE_SCALE[1], 1.0, 1.0])


@dataclass(frozen=True)
class CurveSystem:
    """Defining system of a fold or Hopf curve at fixed rates ``base``."""

    base: Params
    kind: CurveKind
    bounds: tuple[float, float, float, float] = DEFAULT_BOUNDS

    def to_u(self, state: FloatArray, p: Params) -> FloatArray:
        return np.array([state[0] / STATE_SCALE[0], state[1] / STATE_SCALE[1], p.gamma, p.rho])

    def state_of(self, u: FloatArray) -> FloatArray:
        return u[:2] * STATE_SCALE

    def params_of(self, u: FloatArray) -> Params:
        return self.base.replace(gamma=float(u[2]), rho=float(u[3]))

    def fold_test(self, u: FloatArray) -> float:
        return float(np.linalg.det(jacobian_reduced(self.state_of(u), self.params_of(u))))

    def hopf_test(self, u: FloatArray) -> float:
        return float(np.trace(jacobian_reduced(self.state_of(u), self.params_of(u))))

    def defining_test(self, u: FloatArray) -> float:
        return self.fold_test(u) if self.kind is CurveKind.FOLD else self.hopf_test(u)

    def monitor_test(self, u: FloatArray) -> float:
        """``trace J`` on a fold curve, ``det J`` on a Hopf curve; zero at a BT point."""
        return self.hopf_test(u) if self.kind is CurveKind.FOLD else self.fold_test(u)

    def state_rows(self, u: FloatArray) -> FloatArray:
        x, p = self.state_of(u), self.params_of(u)
        rows = np.empty((2, 4))
        rows[:, :2] = jacobian_reduced(x, p) * STATE_SCALE[None, :]
        rows[:, 2] = parameter_derivative(x, p, ActiveParam.GAMMA)
        rows[:, 3] = parameter_derivative(x, p, ActiveParam.RHO)
        return rows

    def test_gradients(self, u: FloatArray) -> tuple[FloatArray, FloatArray]:
        sens = jacobian_sensitivity(self.state_of(u), self.params_of(u))
        return sens.det_gradient() * _U_SCALE, sens.trace_gradient() * _U_SCALE

    def residual(self, u: FloatArray) -> FloatArray:
        return np.append(rhs_reduced(self.state_of(u), self.params_of(u)), self.defining_test(u))

    def jacobian(self, u: FloatArray) -> FloatArray:
        grad_det, grad_tr = self.test_gradients(u)
        row = grad_det if self.kind is CurveKind.FOLD else grad_tr
        return np.vstack([self.state_rows(u), row[None, :]])

    def in_domain(self, u: FloatArray) -> bool:
        g_lo, g_hi, r_lo, r_hi = self.bounds
        return bool(g_lo <= u[2] <= g_hi and r_lo <= u[3] <= r_hi and u[0] > 0.0 and u[1] > 0.0)

    def problem(self) -> ContinuationProblem:
        return ContinuationProblem(self.residual, self.jacobian, self.in_domain)


def _hopf_det_filter(system: CurveSystem) -> StepFilter:
    def step_filter(prev: ArcPoint, u_new: FloatArray) -> bool:
        det_old, det_new = system.fold_test(prev.u), system.fold_test(u_new)
        return not (det_old > 0.0 and 0.0 < det_new < DET_DROP_LIMIT * det_old)

    return step_filter


def _hopf_stop(system: CurveSystem) -> StopRule:
    def stop_rule(_prev: ArcPoint, new: ArcPoint) -> bool:
        return system.fold_test(new.u) <= 0.0

    return stop_rule


def _start(system: CurveSystem, seed: SpecialPoint, frozen: ActiveParam) -> FloatArray:
    u0 = system.to_u(np.asarray(seed.state, dtype=float)[:2], seed.params)
    residual = float(np.max(np.abs(system.residual(u0))))
    if residual <= SEED_TOL:
        return u0
    # Pull the seed onto the curve with the frozen parameter held fixed.
    e = np.zeros(4)
    e[2 if frozen is ActiveParam.GAMMA else 3] = 1.0
    report = correct(system.problem(), u0, u0, e, 0.0)
    if not report.converged:
        raise ContinuationError(
            "Seed does not satisfy the defining system.", {"kind": system.kind.value, "residual": residual}
        )
    return report.root


def _initial_tangent(problem: ContinuationProblem, u0: FloatArray) -> FloatArray:
    for k in (3, 2):
        e = np.zeros(4)
        e[k] = 1.0
        try:
            return tangent_at(problem, u0, e)
        except SingularMatrixError:
            continue
    raise ContinuationError("Tangent undefined at the seed.", {"u0": u0.tolist()})


def _curve_point(system: CurveSystem, u: FloatArray, s: float) -> CurvePoint:
    x, p = system.state_of(u), system.params_of(u)
    jac = jacobian_reduced(x, p)
    eigs = eigvals_small(jac)
    det = float(np.linalg.det(jac))
    l1: float | None = None
    if system.kind is CurveKind.HOPF and det > 0.0:
        try:
            l1 = lyapunov_l1(p, x).value
        except DomainError:
            l1 = None
    return CurvePoint(
        state=x,
        params=p,
        test_fold=det,
        test_hopf=float(np.trace(jac)),
        eigenvalues=(eigs[0], eigs[1]),
        residual=float(np.max(np.abs(system.residual(u)))),
        arclength=s,
        l1=l1,
    )


def _trace_curve(
    system: CurveSystem,
    seed: SpecialPoint,
    h0: float,
    hmax: float,
    max_points: int,
) -> Codim2Curve:
    frozen = seed.active_param.other if seed.active_param is not None else ActiveParam.RHO
    problem = system.problem()
    u0 = _start(system, seed, frozen)
    t0 = _initial_tangent(problem, u0)
    settings = StepSettings(h0=h0, hmax=hmax, max_points=max_points)
    step_filter = _hopf_det_filter(system) if system.kind is CurveKind.HOPF else None
    stop_rule = _hopf_stop(system) if system.kind is CurveKind.HOPF else None

    halves: list[list[ArcPoint]] = []
    truncated = False
    for sign in (1, -1):
        trace = trace_branch(problem, u0, sign * t0, settings, step_filter=step_filter, stop_rule=stop_rule)
        truncated = truncated or trace.truncated
        halves.append(trace.points)
        kind, reason = system.kind.value, trace.stop_reason
        logger.debug("%s direction %+d stopped (%s) after %d points", kind, sign, reason, len(trace.points))
    forward, backward = halves
    arc = [ArcPoint(pt.u, -pt.tangent, -pt.s) for pt in reversed(backward[1:])] + forward
    points = [_curve_point(system, pt.u, pt.s) for pt in arc]
    return Codim2Curve(points=points, kind=system.kind, truncated=truncated)


def _system_for(curve: Codim2Curve, bounds: tuple[float, float, float, float] = DEFAULT_BOUNDS) -> CurveSystem:
    if curve.kind not in (CurveKind.FOLD, CurveKind.HOPF):
        raise DomainError("Only fold and Hopf curves carry a defining system.", {"kind": curve.kind.value})
    return CurveSystem(curve.points[0].params, curve.kind, bounds)


def _arc(system: CurveSystem, pt: CurvePoint) -> ArcPoint:
    return ArcPoint(system.to_u(pt.state, pt.params), np.zeros(4), pt.arclength)


def _polish_bt(system: CurveSystem, u: FloatArray) -> FloatArray:
    def G(z: FloatArray) -> FloatArray:
        tests = [system.fold_test(z), system.hopf_test(z)]
        return np.concatenate([rhs_reduced(system.state_of(z), system.params_of(z)), tests])

    def JG(z: FloatArray) -> FloatArray:
        grad_det, grad_tr = system.test_gradients(z)
        return np.vstack([system.state_rows(z), grad_det[None, :], grad_tr[None, :]])

    report = newton(G, JG, u, tol=BT_TOL, max_iter=20)
    if report.converged:
        return report.root
    logger.debug("BT polish stopped at residual %.3g; keeping the localized point", report.residual_norm)
    return u


def _special_at(
    system: CurveSystem, kind: SpecialKind, u: FloatArray, a: CurvePoint, b: CurvePoint, aux: dict[str, Any]
) -> SpecialPoint:
    x, p = system.state_of(u), system.params_of(u)
    jac = jacobian_reduced(x, p)
    chord = float(np.linalg.norm(system.to_u(b.state, b.params) - system.to_u(a.state, a.params)))
    frac = float(np.linalg.norm(u - system.to_u(a.state, a.params))) / chord if chord > 0 else 0.0
    aux = {"det": float(np.linalg.det(jac)), "trace": float(np.trace(jac)), "curve": system.kind.value, **aux}
    sp = SpecialPoint(
        kind=kind,
        params=p,
        state=x,
        aux=aux,
        arclength=a.arclength + min(1.0, frac) * (b.arclength - a.arclength),
    )
    logger.info("%s on %s at gamma=%.9g rho=%.9g", kind.value, system.kind.value, p.gamma, p.rho)
    return sp


def detect_bt(curve: Codim2Curve) -> list[SpecialPoint]:
    """Bogdanov-Takens points where the curve's monitor changes sign.

    The monitor is ``trace J`` on a fold curve and ``det J`` on a Hopf curve.
    Each bracket is localized on the curve and polished on the square
    system ``{F = 0, det J = 0, trace J = 0}``.
    """
    if len(curve.points) < 2:
        return []
    system = _system_for(curve)
    problem = system.problem()
    found: list[SpecialPoint] = []
    for a, b in zip(curve.points[:-1], curve.points[1:], strict=True):
        m_a = a.test_hopf if curve.kind is CurveKind.FOLD else a.test_fold
        m_b = b.test_hopf if curve.kind is CurveKind.FOLD else b.test_fold
        if m_a * m_b >= 0.0:
            continue
        try:
            u = locate_on_segment(problem, _arc(system, a), _arc(system, b), system.monitor_test)
        except ConvergenceError as exc:
            logger.warning("BT localization failed on %s: %s", curve.kind.value, exc.message)
            continue
        found.append(_special_at(system, SpecialKind.BT, _polish_bt(system, u), a, b, {}))
    return found


def detect_gh(curve: Codim2Curve) -> list[SpecialPoint]:
    """Generalised Hopf points: sign changes of ``l1`` along a Hopf curve.

    ``aux["l1_slope_sign"]`` is the sign of the change of ``l1`` in the
    direction of increasing arclength.
    """
    if curve.kind is not CurveKind.HOPF:
        raise DomainError("GH points live on Hopf curves.", {"kind": curve.kind.value})
    system = _system_for(curve)
    problem = system.problem()

    def l1_at(u: FloatArray) -> float:
        return lyapunov_l1(system.params_of(u), system.state_of(u)).value

    found: list[SpecialPoint] = []
    for a, b in zip(curve.points[:-1], curve.points[1:], strict=True):
        if a.l1 is None or b.l1 is None or a.l1 * b.l1 >= 0.0:
            continue
        try:
            u = locate_on_segment(problem, _arc(system, a), _arc(system, b), l1_at)
        except (ConvergenceError, DomainError) as exc:
            logger.warning("GH localization failed: %s", exc.message)
            continue
        slope = 1.0 if b.l1 > a.l1 else -1.0
        found.append(_special_at(system, SpecialKind.GH, u, a, b, {"l1_slope_sign": slope}))
    return found


def continue_fold_curve(
    seed: SpecialPoint,
    h0: float = 1e-3,
    hmax: float = 5e-3,
    *,
    max_points: int = 4000,
    bounds: tuple[float, float, float, float] = DEFAULT_BOUNDS,
) -> Codim2Curve:
    """Follow the fold curve through an LP in both directions.

    The run stops cleanly at ``bounds`` or where the folding equilibria
    reach ``I = 0``. BT points are attached to ``special``.
    """
    if seed.kind is not SpecialKind.LP:
        raise DomainError("A fold curve is seeded from an LP point.", {"kind": seed.kind.value})
    system = CurveSystem(seed.params, CurveKind.FOLD, bounds)
    curve = _trace_curve(system, seed, h0, hmax, max_points)
    curve.special = detect_bt(curve)
    logger.info("Fold curve: %d points, %d BT", len(curve.points), len(curve.special))
    return curve


def continue_hopf_curve(
    seed: SpecialPoint,
    h0: float = 1e-3,
    hmax: float = 5e-3,
    *,
    max_points: int = 4000,
    bounds: tuple[float, float, float, float] = DEFAULT_BOUNDS,
) -> Codim2Curve:
    """Follow the Hopf curve through an HB until ``det J`` reaches zero at both ends.

    Steps that would shrink ``det J`` by more than a factor four are retried
    with a smaller step, so the approach to a BT point is resolved. The first
    point past a BT ends that direction and is kept as the bracket.
    """
    if seed.kind is not SpecialKind.HB:
        raise DomainError("A Hopf curve is seeded from an HB point.", {"kind": seed.kind.value})
    system = CurveSystem(seed.params, CurveKind.HOPF, bounds)
    curve = _trace_curve(system, seed, h0, hmax, max_points)
    curve.special = sorted(detect_bt(curve) + detect_gh(curve), key=lambda sp: sp.arclength or 0.0)
    logger.info(
        "Hopf curve: %d points, %d BT, %d GH",
        len(curve.points),
        len(curve.of_kind(SpecialKind.BT)),
        len(curve.of_kind(SpecialKind.GH)),
    )
    return curve
