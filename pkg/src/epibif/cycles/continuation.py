"""Pseudo-arclength continuation of a cycle family in one parameter."""

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from numpy.typing import NDArray

from ..contin.arclength import ArcPoint, ContinuationProblem, StepSettings, tangent_at, trace_branch
from ..core.exceptions import ContinuationError, SingularMatrixError
from ..models.branch import SpecialKind, SpecialPoint
from ..models.cycle import Cycle, CycleBranch
from ..schemas.params import ActiveParam
from ..system.constants import STATE_SCALE
from ..system.equilibria import endemic_equilibria
from .homoclinic import PERIOD_BLOWUP_THRESHOLD, TAIL_SAMPLES, homoclinic_proxy
from .shooting import ShootingSettings, ShootingSystem, cycle_at, resegment

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

START_RESIDUAL_TOL = 1e-8
MULTI_SEGMENTS = 4
MIN_AMPLITUDE = 1e-3

# A cycle corrector that needs more iterations than this fails the step.
CORRECTOR_ITER = 6
CORRECTOR_HALVINGS = 2
CYCLE_HMIN = 1e-5
BLOWUP_APPROACH = 0.9
BLOWUP_STEP = 2e-2

_Traced = list[tuple[Cycle, float]]


def _problem(system: ShootingSystem, lo: float, hi: float) -> ContinuationProblem:
    span = hi - lo

    def in_domain(u: FloatArray) -> bool:
        value = float(u[-1] * system.p_scale)
        seeds = system.seeds_of(u)
        return bool(lo - 1e-12 * span <= value <= hi + 1e-12 * span and np.all(seeds > 0.0))

    return ContinuationProblem(system.residual, system.jacobian, in_domain)


@dataclass
class _BlowupWatch:
    """Stop rule and step cap of one traced direction.

    Every accepted point is turned into a :class:`Cycle` while its flow is
    still cached on the shooting system. The direction stops once
    ``TAIL_SAMPLES`` cycles have reached the period threshold, or when the
    cycle shrinks onto an equilibrium. Close to the threshold the step is
    capped at ``BLOWUP_STEP``.
    """

    system: ShootingSystem
    period_threshold: float
    min_amplitude: float
    cycles: list[Cycle] = field(default_factory=list)
    above: int = 0

    def stop(self, _prev: ArcPoint, new: ArcPoint) -> bool:
        cycle = cycle_at(self.system, new.u)
        self.cycles.append(cycle)
        period = cycle.period
        if period >= self.period_threshold:
            self.above += 1
            if self.above >= TAIL_SAMPLES:
                logger.info("Cycle period reached %.6g: stopping past the blow-up threshold", period)
                return True
            return False
        z0 = self.system.seeds_of(new.u)[0]
        eqs = endemic_equilibria(self.system.params_of(new.u))
        if not eqs:
            return False
        distance = min(float(np.linalg.norm(z0 - eq.state.as_array()[:2] / STATE_SCALE)) for eq in eqs)
        if distance < self.min_amplitude:
            logger.debug("Cycle collapsed onto an equilibrium (distance %.3g)", distance)
            return True
        return False

    def cap(self, cur: ArcPoint) -> float:
        if self.system.period_of(cur.u) >= BLOWUP_APPROACH * self.period_threshold:
            return BLOWUP_STEP
        return math.inf


def _orientation(problem: ContinuationProblem, u0: FloatArray) -> FloatArray:
    for k in (u0.size - 1, u0.size - 2):
        e = np.zeros(u0.size)
        e[k] = 1.0
        try:
            return tangent_at(problem, u0, e)
        except SingularMatrixError:
            continue
    raise ContinuationError("Tangent undefined at the starting cycle.")


def _trace_direction(
    watch: _BlowupWatch,
    u0: FloatArray,
    first: Cycle,
    orient: FloatArray,
    step: StepSettings,
    param_range: tuple[float, float],
) -> tuple[_Traced, bool]:
    lo, hi = param_range
    system = watch.system
    trace = trace_branch(_problem(system, lo, hi), u0, orient, step, stop_rule=watch.stop, step_cap=watch.cap)
    traced: _Traced = [(first, 0.0)]
    traced.extend((c, pt.s) for c, pt in zip(watch.cycles, trace.points[1:], strict=True))
    if not trace.truncated or system.segments >= MULTI_SEGMENTS or len(trace.points) < 2:
        return traced, trace.truncated

    # Retry from the last accepted cycle with multiple shooting.
    last, (cycle, s_last) = trace.points[-1], traced[-1]
    multi = ShootingSystem(system.params, system.active, MULTI_SEGMENTS, system.p_scale, system.settings)
    seeds = resegment(cycle, MULTI_SEGMENTS, system.settings)
    u_multi = multi.pack(seeds, cycle.period, cycle.params.value(system.active))
    orient_multi = np.zeros(multi.size)
    orient_multi[-2:] = last.tangent[-2:]
    if not np.any(orient_multi):
        orient_multi[-2] = 1.0
    logger.info("Switching to %d-segment shooting at T=%.6g", MULTI_SEGMENTS, cycle.period)
    watch.system, watch.cycles = multi, []
    try:
        retry = trace_branch(
            _problem(multi, lo, hi), u_multi, orient_multi, step, stop_rule=watch.stop, step_cap=watch.cap
        )
    except ContinuationError as exc:
        logger.warning("Multiple shooting could not restart: %s", exc.message)
        return traced, True
    traced.extend((c, s_last + pt.s) for c, pt in zip(watch.cycles, retry.points[1:], strict=True))
    return traced, retry.truncated


def _lpc_points(cycles: list[Cycle], arclength: list[float], active: ActiveParam) -> list[SpecialPoint]:
    values = np.array([c.params.value(active) for c in cycles])
    s = np.asarray(arclength)
    found: list[SpecialPoint] = []
    for i in range(1, len(cycles) - 1):
        if (values[i] - values[i - 1]) * (values[i + 1] - values[i]) >= 0.0:
            continue
        window = slice(i - 1, i + 2)
        coeffs = np.polyfit(s[window] - s[i], values[window], 2)
        a, b = coeffs[0], coeffs[1]
        s_star = -b / (2.0 * a) if a != 0.0 else 0.0
        s_star = float(np.clip(s_star, s[i - 1] - s[i], s[i + 1] - s[i]))
        value = float(np.polyval(coeffs, s_star))
        period = float(np.polyval(np.polyfit(s[window] - s[i], [c.period for c in cycles[window]], 2), s_star))
        cyc = cycles[i]
        sp = SpecialPoint(
            kind=SpecialKind.LPC,
            params=cyc.params.with_value(active, value),
            state=cyc.seeds[0] * STATE_SCALE,
            aux={"period": period, "multiplier": abs(cyc.nontrivial_multiplier)},
            arclength=float(s[i] + s_star),
            active_param=active,
        )
        logger.info("LPC at %s=%.9g (T=%.6g)", active.value, value, period)
        found.append(sp)
    return found


def continue_cycles(
    start: Cycle,
    active: ActiveParam,
    param_range: tuple[float, float],
    h0: float = 1e-2,
    hmax: float = 0.1,
    *,
    max_points: int = 400,
    p_scale: float = 1.0,
    period_threshold: float = PERIOD_BLOWUP_THRESHOLD,
    min_amplitude: float = MIN_AMPLITUDE,
    settings: ShootingSettings | None = None,
) -> CycleBranch:
    """Follow the cycle family through ``start`` in both directions.

    A direction ends at the range boundary, once ``TAIL_SAMPLES`` cycles have
    period at or above ``period_threshold``, or when the cycle shrinks onto
    an equilibrium. Folds of the family in ``active`` are reported as LPC
    points and a blow-up of the period as a HOM point.

    Raises
    ------
    ContinuationError
        If ``start`` does not satisfy the closure and phase conditions.
    """
    lo, hi = sorted(param_range)
    settings = settings or ShootingSettings()
    segments = settings.segments
    system = ShootingSystem(start.params, active, segments, p_scale, settings)
    seeds = start.seeds if start.seeds.shape[0] == segments else resegment(start, segments, settings)
    u0 = system.pack(seeds, start.period, start.params.value(active))
    residual = float(np.max(np.abs(system.residual(u0))))
    if not residual <= START_RESIDUAL_TOL:
        raise ContinuationError("Start cycle does not satisfy the shooting equations.", {"residual": residual})

    step = StepSettings(
        h0=h0,
        hmax=hmax,
        hmin=CYCLE_HMIN,
        max_points=max_points,
        tol=settings.newton_tol,
        max_iter=CORRECTOR_ITER,
        halvings=CORRECTOR_HALVINGS,
        grow_after=2,
        grow_factor=1.5,
    )
    first = cycle_at(system, u0)
    t0 = _orientation(_problem(system, lo, hi), u0)
    halves: dict[int, _Traced] = {}
    truncated = False
    for sign in (1, -1):
        watch = _BlowupWatch(system, period_threshold, min_amplitude)
        traced, cut = _trace_direction(watch, u0, first, sign * t0, step, (lo, hi))
        halves[sign] = traced
        truncated = truncated or cut
    joined = [(c, -s) for c, s in reversed(halves[-1][1:])] + halves[1]
    cycles = [c for c, _ in joined]
    arclength = [s for _, s in joined]

    branch = CycleBranch(
        cycles=cycles,
        active_param=active,
        frozen_param_value=start.params.value(active.other),
        truncated=truncated,
        arclength=arclength,
    )
    branch.special.extend(_lpc_points(cycles, arclength, active))
    hom = homoclinic_proxy(branch, period_threshold=period_threshold)
    if hom is not None:
        branch.special.append(hom)
    logger.info(
        "Cycle branch in %s: %d cycles, %d LPC, %s",
        active.value,
        len(cycles),
        len(branch.of_kind(SpecialKind.LPC)),
        "HOM" if hom is not None else "no HOM",
    )
    return branch
