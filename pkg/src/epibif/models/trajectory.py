from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from .state import EquilibriumLabel


@dataclass
class Trajectory:
    times: NDArray[np.float64]
    states: NDArray[np.float64]
    accepted_steps: int
    rejected_steps: int
    sample_times: NDArray[np.float64] = field(default_factory=lambda: np.empty(0))
    sample_states: NDArray[np.float64] = field(default_factory=lambda: np.empty((0, 2)))

    @property
    def final_state(self) -> NDArray[np.float64]:
        return self.states[-1]


class FateKind(str, Enum):
    TO_EQUILIBRIUM = "ToEquilibrium"
    TO_CYCLE = "ToCycle"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class OrbitFate:
    """Where an orbit ends up.

    ``label`` is set for :attr:`FateKind.TO_EQUILIBRIUM`; ``period`` and
    ``mean_I`` for :attr:`FateKind.TO_CYCLE`.
    """

    kind: FateKind
    transient_time: float = 0.0
    label: EquilibriumLabel | None = None
    period: float | None = None
    mean_I: float | None = None

    @property
    def tag(self) -> str:
        if self.kind is FateKind.TO_EQUILIBRIUM and self.label is not None:
            return self.label.value
        if self.kind is FateKind.TO_CYCLE:
            return "cycle"
        return "undecided"

    @classmethod
    def undecided(cls, transient_time: float = 0.0) -> "OrbitFate":
        return cls(FateKind.UNDECIDED, transient_time)
