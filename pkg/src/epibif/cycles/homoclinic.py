"""Homoclinic orbits approximated as the high-period end of a cycle family."""

import logging
import warnings

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import OptimizeWarning, curve_fit

from ..models.branch import SpecialKind, SpecialPoint
from ..models.cycle import CycleBranch
from ..models.state import Stability
from ..system.constants import STATE_SCALE
from ..system.equilibria import endemic_equilibria

logger = logging.getLogger(__name__)

PERIOD_BLOWUP_THRESHOLD = 1000.0
TAIL_SAMPLES = 5
SADDLE_DISTANCE = 1e-2
FIT_RESIDUAL_TOL = 1e-3


def _saddle_distance(mesh: NDArray[np.float64], branch: CycleBranch) -> tuple[float, NDArray[np.float64] | None]:
    params = branch.cycles[-1].params
    saddles = [eq for eq in endemic_equilibria(params) if eq.stability is Stability.SADDLE]
    if not saddles:
        return float("inf"), None
    z = mesh / STATE_SCALE
    best, where = float("inf"), None
    for eq in saddles:
        x = eq.state.as_array()[:2]
        d = float(np.min(np.linalg.norm(z - x / STATE_SCALE, axis=1)))
        if d < best:
            best, where = d, x
    return best, where


def _tail(branch: CycleBranch, samples: int, period_threshold: float) -> CycleBranch | None:
    """The last ``samples`` cycles at or above ``period_threshold``, from the high-period end."""
    periods = branch.periods()
    if periods.size < samples:
        return None
    cycles = branch.cycles if periods[-1] >= periods[0] else branch.cycles[::-1]
    high = [c for c in cycles if c.period >= period_threshold]
    if len(high) < samples:
        return None
    tail = high[-samples:]
    if not np.all(np.diff([c.period for c in tail]) > 0.0):
        return None
    return CycleBranch(cycles=list(tail), active_param=branch.active_param)


def _extrapolate(T: NDArray[np.float64], values: NDArray[np.float64]) -> tuple[float, float | None]:
    """``param(T) = p_hom + c exp(-sigma (T - T_last))``; returns ``(p_hom, sigma)``."""
    p_last = float(values[-1])
    if float(np.ptp(values)) < 1e-12:
        return p_last, None
    t_last = float(T[-1])

    def model(t: NDArray[np.float64], p_hom: float, c: float, sigma: float) -> NDArray[np.float64]:
        return p_hom + c * np.exp(-sigma * (t - t_last))

    sigma0 = 1.0 / max(float(T[-1] - T[0]), 1.0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", OptimizeWarning)
            coeffs, _ = curve_fit(
                model,
                T,
                values,
                p0=(p_last, float(values[-2] - p_last) or 1e-9, sigma0),
                bounds=([-np.inf, -np.inf, 0.0], [np.inf, np.inf, np.inf]),
                maxfev=5000,
            )
    except (RuntimeError, ValueError, OptimizeWarning) as exc:
        logger.debug("Homoclinic extrapolation fit failed (%s); using the last branch entry", exc)
        return p_last, None
    p_hom, _c, sigma = (float(v) for v in coeffs)
    misfit = float(np.max(np.abs(model(T, *coeffs) - values)))
    if misfit > FIT_RESIDUAL_TOL or not np.isfinite(p_hom):
        logger.debug("Homoclinic fit residual %.3g too large; using the last branch entry", misfit)
        return p_last, None
    return p_hom, sigma


def homoclinic_proxy(
    branch: CycleBranch,
    *,
    period_threshold: float = PERIOD_BLOWUP_THRESHOLD,
    samples: int = TAIL_SAMPLES,
    saddle_distance: float = SADDLE_DISTANCE,
) -> SpecialPoint | None:
    """HOM point at the end of ``branch`` where the period blows up.

    At least ``samples`` cycles must reach ``period_threshold``, growing
    monotonically in period, and the last must pass within
    ``saddle_distance`` (scaled) of a saddle equilibrium. The parameter is
    extrapolated to infinite period from those ``samples`` entries.
    """
    tail = _tail(branch, samples, period_threshold)
    if tail is None:
        logger.debug(
            "Fewer than %d cycles in a monotone tail past T=%.6g: no homoclinic end", samples, period_threshold
        )
        return None
    last = tail.cycles[-1]
    distance, saddle = _saddle_distance(last.mesh, tail)
    if saddle is None or distance > saddle_distance:
        logger.debug("High-period cycle stays %.3g away from any saddle: no homoclinic end", distance)
        return None

    active = branch.active_param
    T = tail.periods()
    p_hom, sigma = _extrapolate(T, tail.values())
    aux = {"period": float(T[-1]), "saddle_distance": distance, "sigma": sigma}
    sp = SpecialPoint(
        kind=SpecialKind.HOM,
        params=last.params.with_value(active, p_hom),
        state=saddle,
        aux=aux,
        active_param=active,
    )
    logger.info("HOM at %s=%.9g (T=%.6g, saddle distance %.3g)", active.value, p_hom, T[-1], distance)
    return sp
