from dataclasses import dataclass
import logging
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from ..core.exceptions import DomainError, StiffnessSuspectedError
from ..models.state import EquilibriumPoint, Stability
from ..system.constants import STATE_SCALE
from ..system.vector_field import jacobian_reduced, planar_field
from .integrator import integrate_flow

logger = logging.getLogger(__name__)

ManifoldKind = Literal["stable", "unstable"]


@dataclass(frozen=True)
class ManifoldBranch:
    kind: ManifoldKind
    side: int
    points: NDArray[np.float64]


def saddle_manifolds(
    saddle: EquilibriumPoint,
    which: Literal["stable", "unstable", "both"] = "stable",
    *,
    offset: float = 1e-6,
    t_max: float = 5000.0,
    box: tuple[float, float, float, float] | None = None,
) -> list[ManifoldBranch]:
    """Trace the invariant manifolds of a planar saddle.

    Each branch starts ``offset`` (scaled units) from the saddle along the
    eigenvector and is integrated backward (stable) or forward (unstable)
    until it leaves ``box`` or ``t_max`` elapses.
    """
    if saddle.stability is not Stability.SADDLE:
        raise DomainError("Invariant manifolds are traced from saddles only.", {"stability": saddle.stability.value})
    p = saddle.params
    x_s = saddle.state.as_array()[:2]
    A = jacobian_reduced(x_s, p) * STATE_SCALE[None, :] / STATE_SCALE[:, None]
    eigvals, eigvecs = np.linalg.eig(A)
    f = planar_field(p)
    lam_over_mu = p.lambda_ / p.mu
    s_lo, s_hi, i_lo, i_hi = box if box is not None else (0.0, 2.0 * lam_over_mu, 0.0, 400.0)

    def outside(_t: float, y: NDArray[np.float64]) -> bool:
        return bool(y[0] < s_lo or y[0] > s_hi or y[1] < i_lo or y[1] > i_hi)

    kinds: list[ManifoldKind] = ["stable", "unstable"] if which == "both" else [which]
    branches: list[ManifoldBranch] = []
    for kind in kinds:
        k = int(np.argmin(eigvals.real)) if kind == "stable" else int(np.argmax(eigvals.real))
        v = np.real(eigvecs[:, k])
        v = v / np.linalg.norm(v) * STATE_SCALE
        t_end = -t_max if kind == "stable" else t_max
        for side in (1, -1):
            start = x_s + side * offset * v
            try:
                flow = integrate_flow(f, start, (0.0, t_end), 1e-9, 1e-9, terminate=outside, h_max=5.0)
                points = flow.states
            except StiffnessSuspectedError as exc:
                logger.warning("Manifold branch %s/%+d stopped early: %s", kind, side, exc.message)
                points = np.array([start])
            branches.append(ManifoldBranch(kind, side, np.vstack([x_s[None, :], points])))
    return branches
