"""Dormand-Prince 5(4) with PI step control and Hairer's dense output."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
import logging
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq

from ..core.exceptions import DomainError, StiffnessSuspectedError
from ..models.state import StateVec
from ..models.trajectory import Trajectory
from ..schemas.params import Params
from ..system.vector_field import full_field, planar_field

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
RHS = Callable[[float, FloatArray], FloatArray]

# Butcher tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# difference between the 5th and embedded 4th order weights
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# dense output
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423

SAFETY = 0.9
FAC_MIN, FAC_MAX = 0.2, 10.0
PI_ALPHA, PI_BETA = 0.7 / 5, 0.4 / 5
H_MIN = 1e-12


@dataclass(frozen=True)
class DenseStep:
    t0: float
    h: float
    coeffs: FloatArray

    def __call__(self, t: float) -> FloatArray:
        theta = (t - self.t0) / self.h
        theta1 = 1.0 - theta
        r1, r2, r3, r4, r5 = self.coeffs
        return r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)))


@dataclass
class FlowResult:
    times: FloatArray
    states: FloatArray
    accepted_steps: int
    rejected_steps: int
    eval_times: FloatArray = field(default_factory=lambda: np.empty(0))
    eval_states: FloatArray = field(default_factory=lambda: np.empty((0, 0)))
    event_times: list[float] = field(default_factory=list)
    event_states: list[FloatArray] = field(default_factory=list)
    terminated: bool = False

    @property
    def y_end(self) -> FloatArray:
        return self.states[-1]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])


def _rms(v: FloatArray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(fun: RHS, t0: float, y0: FloatArray, f0: FloatArray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = fun(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def integrate_flow(
    fun: RHS,
    y0: ArrayLike,
    t_span: tuple[float, float],
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    *,
    t_eval: Sequence[float] | FloatArray | None = None,
    event: Callable[[float, FloatArray], float] | None = None,
    event_direction: int = -1,
    terminate: Callable[[float, FloatArray], bool] | None = None,
    h_max: float | None = None,
    max_steps: int = 2_000_000,
) -> FlowResult:
    """Integrate ``y' = fun(t, y)`` over ``t_span`` (either direction).

    Parameters
    ----------
    t_eval
        Times at which to sample the dense output; must lie inside ``t_span``.
    event
        Scalar function whose zeros are located with ``brentq`` on the dense
        output. Only crossings in ``event_direction`` (``-1`` for decreasing,
        ``+1`` for increasing, ``0`` for both) are recorded. Forward time only.
    terminate
        Checked after every accepted step; returning ``True`` stops the run.

    Raises
    ------
    StiffnessSuspectedError
        If the step size drops below ``1e-12``.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float, copy=True).ravel()
    if not np.all(np.isfinite(y)):
        raise DomainError("Initial state must be finite.", {"y0": y.tolist()})
    if not (1e-14 <= rel_tol <= 1e-2 and abs_tol > 0):
        raise DomainError("Integration tolerances out of range.", {"rel_tol": rel_tol, "abs_tol": abs_tol})

    sign = 1.0 if t1 >= t0 else -1.0
    if sign < 0 and event is not None:
        raise DomainError("Event location is only supported in forward time.")
    span = abs(t1 - t0)

    def g(tau: float, z: FloatArray) -> FloatArray:
        return sign * np.asarray(fun(t0 + sign * tau, z), dtype=float)

    samples: FloatArray = np.empty(0)
    if t_eval is not None:
        samples = np.sort(np.abs(np.asarray(t_eval, dtype=float) - t0))
    eval_out: list[FloatArray] = []
    next_sample = 0

    times = [0.0]
    states = [y.copy()]
    event_times: list[float] = []
    event_states: list[FloatArray] = []
    accepted = rejected = 0
    terminated = False

    tau = 0.0
    while next_sample < samples.size and samples[next_sample] <= 0.0:
        eval_out.append(y.copy())
        next_sample += 1
    if span == 0.0:
        return _result(t0, sign, times, states, accepted, rejected, samples, eval_out, event_times, event_states)

    k1 = g(0.0, y)
    h = min(_initial_step(g, 0.0, y, k1, rel_tol, abs_tol), span)
    h_cap = span if h_max is None else min(span, h_max)
    h = min(h, h_cap)
    err_old = 1e-4
    g_old = event(t0, y) if event is not None else 0.0
    last_rejected = False

    for _ in range(max_steps):
        if tau >= span:
            break
        if h < H_MIN:
            raise StiffnessSuspectedError(t=t0 + sign * tau)
        h = min(h, span - tau)

        k2 = g(tau + C2 * h, y + h * (A21 * k1))
        k3 = g(tau + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = g(tau + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = g(tau + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = g(tau + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = g(tau + h, y_new)

        err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / scale)
        if not math.isfinite(err):
            err = 1e10

        if err > 1.0:
            rejected += 1
            h *= max(FAC_MIN, SAFETY * err ** (-1 / 5))
            last_rejected = True
            continue

        accepted += 1
        ydiff = y_new - y
        bspl = h * k1 - ydiff
        dense = DenseStep(
            tau,
            h,
            np.array(
                [y, ydiff, bspl, ydiff - h * k7 - bspl, h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)]
            ),
        )
        tau_new = tau + h
        if span - tau_new <= 1e-13 * span:
            tau_new = span

        while next_sample < samples.size and samples[next_sample] <= tau_new:
            eval_out.append(dense(float(samples[next_sample])))
            next_sample += 1

        if event is not None:
            g_new = event(t0 + tau_new, y_new)
            crossed = g_old * g_new < 0.0 or (g_new == 0.0 and g_old != 0.0)
            wanted = event_direction == 0 or (event_direction < 0 and g_old > 0) or (event_direction > 0 and g_old < 0)
            if crossed and wanted:
                t_hit = brentq(lambda s, d=dense: event(t0 + s, d(s)), tau, tau_new, xtol=1e-12, rtol=1e-13)
                event_times.append(t0 + t_hit)
                event_states.append(dense(t_hit))
            g_old = g_new

        tau, y, k1 = tau_new, y_new, k7
        times.append(tau)
        states.append(y.copy())

        if terminate is not None and terminate(t0 + sign * tau, y):
            terminated = True
            break

        factor = SAFETY * max(err, 1e-10) ** (-PI_ALPHA) * err_old**PI_BETA
        factor = min(FAC_MAX, max(FAC_MIN, factor))
        if last_rejected:
            factor = min(1.0, factor)
        h = min(h * factor, h_cap)
        err_old = max(err, 1e-4)
        last_rejected = False
    else:
        logger.warning("Integration hit max_steps=%d at t=%.6g", max_steps, t0 + sign * tau)

    return _result(
        t0, sign, times, states, accepted, rejected, samples, eval_out, event_times, event_states, terminated
    )


def _result(
    t0: float,
    sign: float,
    times: list[float],
    states: list[FloatArray],
    accepted: int,
    rejected: int,
    samples: FloatArray,
    eval_out: list[FloatArray],
    event_times: list[float],
    event_states: list[FloatArray],
    terminated: bool = False,
) -> FlowResult:
    dim = states[0].size
    return FlowResult(
        times=t0 + sign * np.asarray(times),
        states=np.asarray(states),
        accepted_steps=accepted,
        rejected_steps=rejected,
        eval_times=t0 + sign * samples[: len(eval_out)],
        eval_states=np.asarray(eval_out) if eval_out else np.empty((0, dim)),
        event_times=event_times,
        event_states=event_states,
        terminated=terminated,
    )


def integrate(
    p: Params,
    x0: StateVec | ArrayLike,
    t_end: float,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    *,
    t_eval: Sequence[float] | None = None,
) -> Trajectory:
    """Orbit of the model from ``x0`` over ``[0, t_end]``.

    Three-component states use the full system, two-component states the
    planar reduction.
    """
    x = x0.as_array() if isinstance(x0, StateVec) else np.asarray(x0, dtype=float).ravel()
    if np.any(x < 0):
        raise DomainError("Initial population state must be nonnegative.", {"x0": x.tolist()})
    if not (1e-12 <= rel_tol <= 1e-3 and 1e-12 <= abs_tol <= 1e-3):
        raise DomainError("Tolerances must lie in [1e-12, 1e-3].", {"rel_tol": rel_tol, "abs_tol": abs_tol})
    fun = full_field(p) if x.size == 3 else planar_field(p)
    flow = integrate_flow(fun, x, (0.0, float(t_end)), rel_tol, abs_tol, t_eval=t_eval)
    return Trajectory(
        times=flow.times,
        states=flow.states,
        accepted_steps=flow.accepted_steps,
        rejected_steps=flow.rejected_steps,
        sample_times=flow.eval_times,
        sample_states=flow.eval_states,
    )
