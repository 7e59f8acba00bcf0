from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import trapezoid

from ..schemas.params import ActiveParam, Params
from ..system.constants import STATE_SCALE
from .branch import SpecialKind, SpecialPoint


class CycleStability(str, Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    SEMISTABLE = "Semistable"


@dataclass(frozen=True)
class Cycle:
    """A periodic orbit sampled at uniform phase.

    ``mesh`` holds ``N`` planar states at ``t_k = k T / (N - 1)``, so the first
    and last rows describe the same point of the orbit. ``seeds`` are the
    multiple-shooting start points in scaled coordinates.
    """

    mesh: NDArray[np.float64]
    period: float
    params: Params
    multipliers: tuple[complex, complex]
    stability: CycleStability
    seeds: NDArray[np.float64]
    residual: float = 0.0

    @property
    def phase(self) -> NDArray[np.float64]:
        return np.linspace(0.0, 1.0, self.mesh.shape[0])

    @property
    def nontrivial_multiplier(self) -> complex:
        return self.multipliers[1]

    @property
    def closure_error(self) -> float:
        return float(np.max(np.abs((self.mesh[-1] - self.mesh[0]) / STATE_SCALE)))

    @property
    def mean_I(self) -> float:
        return float(trapezoid(self.mesh[:, 1], self.phase))

    @property
    def amplitude_I(self) -> float:
        return float(np.ptp(self.mesh[:, 1]))

    def with_stability(self, stability: CycleStability) -> "Cycle":
        return Cycle(self.mesh, self.period, self.params, self.multipliers, stability, self.seeds, self.residual)


@dataclass
class CycleBranch:
    cycles: list[Cycle]
    special: list[SpecialPoint] = field(default_factory=list)
    active_param: ActiveParam = ActiveParam.GAMMA
    frozen_param_value: float = 0.0
    truncated: bool = False
    arclength: list[float] = field(default_factory=list)

    def values(self) -> NDArray[np.float64]:
        return np.array([c.params.value(self.active_param) for c in self.cycles])

    def periods(self) -> NDArray[np.float64]:
        return np.array([c.period for c in self.cycles])

    def of_kind(self, kind: SpecialKind) -> list[SpecialPoint]:
        return [sp for sp in self.special if sp.kind is kind]
