"""Pseudo-arclength predictor-corrector for ``F(u) = 0``, ``F: R^n -> R^(n-1)``.

The same engine drives equilibrium branches, fold/Hopf curves and cycle
branches; callers supply the residual, its Jacobian and a domain predicate.
The corrector is Newton on the bordered system::

    [ F(u)                      ]       [ dF/du ]
    [ d . (u - u_prev) - h      ]  ,    [ d^T   ]

with ``d`` the secant direction through the last two accepted points.
"""

from collections.abc import Callable
from dataclasses import dataclass, field
import logging

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

from ..core.exceptions import ContinuationError, ConvergenceError, SingularMatrixError
from ..core.numerics import MAX_HALVINGS, NewtonReport, newton, solve_linear

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


def _always(_u: FloatArray) -> bool:
    return True


@dataclass(frozen=True)
class ContinuationProblem:
    residual: Callable[[FloatArray], FloatArray]
    jacobian: Callable[[FloatArray], FloatArray]
    in_domain: Callable[[FloatArray], bool] = _always


@dataclass(frozen=True)
class StepSettings:
    h0: float = 1e-3
    hmax: float = 1e-2
    hmin: float = 1e-8
    max_points: int = 2000
    tol: float = 1e-11
    max_iter: int = 12
    halvings: int = MAX_HALVINGS
    grow_after: int = 4
    grow_factor: float = 1.3


@dataclass(frozen=True)
class ArcPoint:
    u: FloatArray
    tangent: FloatArray
    s: float


@dataclass
class Trace:
    points: list[ArcPoint] = field(default_factory=list)
    truncated: bool = False
    stop_reason: str = "max_points"


StepFilter = Callable[[ArcPoint, FloatArray], bool]
StopRule = Callable[[ArcPoint, ArcPoint], bool]
StepCap = Callable[[ArcPoint], float]


def tangent_at(problem: ContinuationProblem, u: FloatArray, orient: FloatArray) -> FloatArray:
    """Unit null vector of ``dF/du`` oriented along ``orient``."""
    jac = np.asarray(problem.jacobian(u), dtype=float)
    bordered = np.vstack([jac, orient[None, :]])
    rhs = np.zeros(u.size)
    rhs[-1] = 1.0
    t = solve_linear(bordered, rhs)
    t /= np.linalg.norm(t)
    return t if float(t @ orient) >= 0.0 else -t


def correct(
    problem: ContinuationProblem,
    u_pred: FloatArray,
    anchor: FloatArray,
    direction: FloatArray,
    sigma: float,
    tol: float = 1e-11,
    max_iter: int = 12,
    max_halvings: int = MAX_HALVINGS,
) -> NewtonReport:
    """Newton on ``F(u) = 0`` with the hyperplane ``direction . (u - anchor) = sigma``."""

    def G(u: FloatArray) -> FloatArray:
        return np.append(problem.residual(u), float(direction @ (u - anchor)) - sigma)

    def JG(u: FloatArray) -> FloatArray:
        return np.vstack([problem.jacobian(u), direction[None, :]])

    return newton(G, JG, u_pred, tol=tol, max_iter=max_iter, max_halvings=max_halvings)


def trace_branch(
    problem: ContinuationProblem,
    u0: FloatArray,
    orient: FloatArray,
    settings: StepSettings,
    *,
    step_filter: StepFilter | None = None,
    stop_rule: StopRule | None = None,
    step_cap: StepCap | None = None,
) -> Trace:
    """Follow the solution curve from ``u0`` in the direction closest to ``orient``.

    ``step_filter(previous, candidate)`` may veto an otherwise converged step,
    which is then retried at half the step size. ``stop_rule(previous, new)``
    ends the trace after ``new`` has been appended. ``step_cap(current)`` bounds
    the next step from above, on top of ``settings.hmax``.
    """
    try:
        t0 = tangent_at(problem, u0, orient)
    except SingularMatrixError as exc:
        raise ContinuationError("Tangent undefined at the starting point.", {"u0": u0.tolist()}) from exc

    trace = Trace(points=[ArcPoint(u0.copy(), t0, 0.0)])
    h = settings.h0
    successes = 0
    while len(trace.points) < settings.max_points:
        cur = trace.points[-1]
        if len(trace.points) > 1:
            chord = cur.u - trace.points[-2].u
            direction = chord / np.linalg.norm(chord)
        else:
            direction = cur.tangent
        if step_cap is not None:
            h = min(h, step_cap(cur))
        report = correct(
            problem, cur.u + h * direction, cur.u, direction, h, settings.tol, settings.max_iter, settings.halvings
        )
        ok = report.converged and (step_filter is None or step_filter(cur, report.root))
        if not ok:
            h *= 0.5
            successes = 0
            if h < settings.hmin:
                trace.truncated = True
                trace.stop_reason = "step_underflow"
                logger.warning("Continuation truncated after %d points: step underflow", len(trace.points))
                break
            continue
        u_new = report.root
        if not problem.in_domain(u_new):
            trace.stop_reason = "boundary"
            break
        try:
            t_new = tangent_at(problem, u_new, direction)
        except SingularMatrixError:
            t_new = direction
        new = ArcPoint(u_new, t_new, cur.s + h)
        trace.points.append(new)
        logger.debug("Accepted point %d at s=%.6g (h=%.3g)", len(trace.points) - 1, new.s, h)
        if stop_rule is not None and stop_rule(cur, new):
            trace.stop_reason = "stop_rule"
            break
        successes += 1
        if successes >= settings.grow_after:
            h = min(h * settings.grow_factor, settings.hmax)
            successes = 0
    return trace


def locate_on_segment(
    problem: ContinuationProblem,
    a: ArcPoint,
    b: ArcPoint,
    test: Callable[[FloatArray], float],
    tol: float = 1e-11,
) -> FloatArray:
    """Zero of ``test`` between two accepted points, searched along the chord.

    Every trial point is corrected back onto the curve before ``test`` is
    evaluated.

    Raises
    ------
    ConvergenceError
        If ``test`` does not change sign across the bracket or a trial point
        cannot be corrected; ``detail`` carries the bracket.
    """
    chord = b.u - a.u
    length = float(np.linalg.norm(chord))
    direction = chord / length
    bracket = {"s_a": a.s, "s_b": b.s, "u_a": a.u.tolist(), "u_b": b.u.tolist()}
    f_a, f_b = test(a.u), test(b.u)
    if f_a == 0.0:
        return a.u.copy()
    if f_b == 0.0:
        return b.u.copy()
    if f_a * f_b > 0.0:
        raise ConvergenceError("Test function does not change sign across the bracket.", bracket)

    def on_curve(sigma: float) -> FloatArray:
        report = correct(problem, a.u + sigma * direction, a.u, direction, sigma, tol)
        if not report.converged:
            raise ConvergenceError("Corrector failed inside the localization bracket.", bracket)
        return report.root

    sigma = brentq(lambda s: test(on_curve(s)), 0.0, length, xtol=1e-14, rtol=1e-14, maxiter=200)
    return on_curve(sigma)
