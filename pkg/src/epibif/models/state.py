from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core.exceptions import DomainError
from ..schemas.params import Params


class Stability(str, Enum):
    STABLE_NODE = "StableNode"
    STABLE_SPIRAL = "StableSpiral"
    SADDLE = "Saddle"
    UNSTABLE_NODE = "UnstableNode"
    UNSTABLE_SPIRAL = "UnstableSpiral"
    NON_HYPERBOLIC = "NonHyperbolic"

    @property
    def is_stable(self) -> bool:
        return self in (Stability.STABLE_NODE, Stability.STABLE_SPIRAL)


class EquilibriumLabel(str, Enum):
    E0 = "E0"
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"


@dataclass(frozen=True)
class StateVec:
    """Population state ``(S, I, R)``; ``R`` is ``None`` for the planar reduction."""

    S: float
    I: float
    R: float | None = None

    def __post_init__(self) -> None:
        values = [self.S, self.I] + ([self.R] if self.R is not None else [])
        if not all(np.isfinite(values)):
            raise DomainError("State components must be finite.", {"state": values})

    @property
    def dim(self) -> int:
        return 2 if self.R is None else 3

    @property
    def is_nonnegative(self) -> bool:
        return self.S >= 0 and self.I >= 0 and (self.R is None or self.R >= 0)

    def as_array(self) -> NDArray[np.float64]:
        if self.R is None:
            return np.array([self.S, self.I])
        return np.array([self.S, self.I, self.R])

    def planar(self) -> "StateVec":
        return StateVec(self.S, self.I)

    @classmethod
    def from_array(cls, values: ArrayLike) -> "StateVec":
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 2:
            return cls(float(x[0]), float(x[1]))
        if x.size == 3:
            return cls(float(x[0]), float(x[1]), float(x[2]))
        raise DomainError("A state has two or three components.", {"size": int(x.size)})


@dataclass(frozen=True)
class EquilibriumPoint:
    state: StateVec
    params: Params
    eigenvalues: tuple[complex, ...]
    stability: Stability
    label: EquilibriumLabel
    residual: float = 0.0
    extra: dict[str, float] = field(default_factory=dict)

    @property
    def is_disease_free(self) -> bool:
        return self.label is EquilibriumLabel.E0
