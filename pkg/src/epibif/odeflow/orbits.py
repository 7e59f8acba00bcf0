"""Orbit classification and phase-portrait fate fields.

An orbit is followed in windows of fixed length. It is declared to reach an
equilibrium once it has stayed inside that equilibrium's scaled neighbourhood
for a whole window, and to reach a cycle once successive returns to the
section ``dI/dt = 0`` (``I`` at a local maximum) agree in position and return
time.
"""

from dataclasses import dataclass
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid

from ..core.exceptions import DomainError, EpibifError
from ..core.utils.parallel import map_ordered
from ..models.state import EquilibriumPoint, StateVec
from ..models.trajectory import FateKind, OrbitFate
from ..schemas.params import Params
from ..system.constants import DEFAULT_BUDGET, DEFAULT_PORTRAIT_WINDOW, STATE_SCALE
from ..system.equilibria import all_equilibria
from ..system.vector_field import planar_field
from .integrator import integrate_flow

logger = logging.getLogger(__name__)

EQ_TOL = 1e-5
RETURN_POS_TOL = 1e-6
RETURN_PERIOD_TOL = 1e-4
MIN_CYCLE_AMPLITUDE = 1e-3
WINDOW = 500.0
MAX_GRID = 200


def _nearest(x: NDArray[np.float64], equilibria: list[EquilibriumPoint]) -> tuple[int | None, float]:
    best, dist = None, np.inf
    for k, eq in enumerate(equilibria):
        d = float(np.max(np.abs((x - eq.state.as_array()[:2]) / STATE_SCALE)))
        if d < dist:
            best, dist = k, d
    return best, dist


def classify_orbit(
    p: Params,
    x0: StateVec | ArrayLike,
    budget: float = DEFAULT_BUDGET,
    *,
    equilibria: list[EquilibriumPoint] | None = None,
    window: float = WINDOW,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
) -> OrbitFate:
    """Follow the orbit from ``x0`` until its omega-limit set is recognised.

    Returns :attr:`FateKind.UNDECIDED` when ``budget`` runs out first.
    Integration failures propagate.
    """
    x = x0.as_array()[:2] if isinstance(x0, StateVec) else np.asarray(x0, dtype=float).ravel()[:2]
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("Orbit must start in the nonnegative quadrant.", {"x0": x.tolist()})
    eqs = all_equilibria(p) if equilibria is None else equilibria
    f = planar_field(p)

    def rise(_t: float, y: NDArray[np.float64]) -> float:
        return float(f(0.0, y)[1])

    t = 0.0
    inside_label: int | None = None
    inside_since: float | None = None
    k0, d0 = _nearest(x, eqs)
    if k0 is not None and d0 <= EQ_TOL:
        inside_label, inside_since = k0, 0.0

    returns_t: list[float] = []
    returns_x: list[NDArray[np.float64]] = []
    seg_times: list[NDArray[np.float64]] = []
    seg_states: list[NDArray[np.float64]] = []

    while t < budget:
        t_next = min(budget, t + window)
        flow = integrate_flow(
            f, x, (t, t_next), rel_tol, abs_tol, event=rise, event_direction=-1, h_max=window / 10
        )
        for tk, xk in zip(flow.times[1:], flow.states[1:], strict=True):
            k, d = _nearest(xk, eqs)
            if k is not None and d <= EQ_TOL:
                if inside_label != k:
                    inside_label, inside_since = k, float(tk)
            else:
                inside_label, inside_since = None, None
        seg_times.append(flow.times)
        seg_states.append(flow.states)
        returns_t.extend(flow.event_times)
        returns_x.extend(flow.event_states)
        x = flow.y_end
        t = flow.t_end

        if inside_label is not None and inside_since is not None and t - inside_since >= window - 1e-9:
            return OrbitFate(FateKind.TO_EQUILIBRIUM, inside_since, label=eqs[inside_label].label)

        fate = _cycle_fate(returns_t, returns_x, seg_times, seg_states)
        if fate is not None:
            return fate
        # only the tail matters for the cycle test
        if len(seg_times) > 4:
            seg_times, seg_states = seg_times[-4:], seg_states[-4:]

    logger.debug("Orbit from %s undecided after budget %.6g", np.asarray(x0).tolist(), budget)
    return OrbitFate.undecided(transient_time=budget)


def _cycle_fate(
    returns_t: list[float],
    returns_x: list[NDArray[np.float64]],
    seg_times: list[NDArray[np.float64]],
    seg_states: list[NDArray[np.float64]],
) -> OrbitFate | None:
    if len(returns_t) < 3:
        return None
    t_a, t_b, t_c = returns_t[-3:]
    x_b, x_c = returns_x[-2] / STATE_SCALE, returns_x[-1] / STATE_SCALE
    period_prev, period = t_b - t_a, t_c - t_b
    if period <= 0.0 or period_prev <= 0.0:
        return None
    if float(np.max(np.abs(x_c - x_b))) > RETURN_POS_TOL:
        return None
    if abs(period - period_prev) > RETURN_PERIOD_TOL * period:
        return None

    times = np.concatenate(seg_times)
    states = np.concatenate(seg_states)
    mask = (times >= t_b) & (times <= t_c)
    if np.count_nonzero(mask) < 3:
        return None
    I_vals = states[mask, 1]
    amplitude = (float(I_vals.max()) - float(I_vals.min())) / STATE_SCALE[1]
    if amplitude < MIN_CYCLE_AMPLITUDE:
        return None
    mean_I = float(trapezoid(I_vals, times[mask]) / (times[mask][-1] - times[mask][0]))
    return OrbitFate(FateKind.TO_CYCLE, transient_time=t_b, period=period, mean_I=mean_I)


@dataclass
class PortraitField:
    """Fates on a regular ``(S, I)`` grid; ``fates[i][j]`` belongs to ``(S[i], I[j])``."""

    params: Params
    S: NDArray[np.float64]
    I: NDArray[np.float64]
    fates: list[list[OrbitFate]]

    def cells(self) -> list[tuple[int, int, float, float, OrbitFate]]:
        return [
            (i, j, float(self.S[i]), float(self.I[j]), self.fates[i][j])
            for i in range(self.S.size)
            for j in range(self.I.size)
        ]

    def decided(self) -> list[OrbitFate]:
        return [c[4] for c in self.cells() if c[4].kind is not FateKind.UNDECIDED]


@dataclass(frozen=True)
class _CellTask:
    params: Params
    x0: tuple[float, float]
    budget: float
    equilibria: list[EquilibriumPoint]
    rel_tol: float
    abs_tol: float


def _classify_cell(task: _CellTask) -> OrbitFate:
    try:
        return classify_orbit(
            task.params,
            task.x0,
            task.budget,
            equilibria=task.equilibria,
            rel_tol=task.rel_tol,
            abs_tol=task.abs_tol,
        )
    except EpibifError as exc:
        logger.warning("Portrait cell at %s failed: %s", task.x0, exc.message)
        return OrbitFate.undecided()


def phase_portrait(
    p: Params,
    window: tuple[float, float, float, float] = DEFAULT_PORTRAIT_WINDOW,
    grid: tuple[int, int] = (20, 20),
    budget: float = DEFAULT_BUDGET,
    *,
    workers: int = 1,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
) -> PortraitField:
    """Classify the orbit through every node of an ``n x m`` grid over ``window``.

    ``window`` is ``(S_min, S_max, I_min, I_max)``; nodes include the edges.
    Cells may be evaluated in parallel; the result is ordered by cell index.
    """
    n, m = grid
    if not (1 <= n <= MAX_GRID and 1 <= m <= MAX_GRID):
        raise DomainError(f"Grid must be at most {MAX_GRID}x{MAX_GRID}.", {"grid": [n, m]})
    s_lo, s_hi, i_lo, i_hi = window
    if s_lo < 0 or i_lo < 0 or s_hi < s_lo or i_hi < i_lo:
        raise DomainError("Portrait window must be a nonnegative rectangle.", {"window": list(window)})
    S = np.linspace(s_lo, s_hi, n)
    I = np.linspace(i_lo, i_hi, m)
    eqs = all_equilibria(p)
    tasks = [_CellTask(p, (float(s), float(i)), budget, eqs, rel_tol, abs_tol) for s in S for i in I]
    flat = map_ordered(_classify_cell, tasks, workers)
    fates = [flat[r * m : (r + 1) * m] for r in range(n)]
    logger.info("Phase portrait %dx%d at gamma=%.6g rho=%.6g done", n, m, p.gamma, p.rho)
    return PortraitField(p, S, I, fates)
