from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..schemas.params import ActiveParam, Params


class SpecialKind(str, Enum):
    LP = "LP"
    HB = "HB"
    BP = "BP"
    BT = "BT"
    GH = "GH"
    HOM = "HOM"
    LPC = "LPC"


@dataclass(frozen=True)
class BranchPoint:
    """One accepted point of an equilibrium branch."""

    state: NDArray[np.float64]
    params: Params
    active_param: ActiveParam
    test_fold: float
    test_hopf: float
    eigenvalues: tuple[complex, complex]
    arclength: float

    @property
    def active_param_value(self) -> float:
        return self.params.value(self.active_param)


@dataclass(frozen=True)
class SpecialPoint:
    kind: SpecialKind
    params: Params
    state: NDArray[np.float64]
    aux: dict[str, Any] = field(default_factory=dict)
    arclength: float | None = None
    active_param: ActiveParam | None = None

    @property
    def location(self) -> tuple[float, float]:
        return (self.params.gamma, self.params.rho)

    @property
    def active_param_value(self) -> float | None:
        return None if self.active_param is None else self.params.value(self.active_param)


@dataclass
class Branch:
    points: list[BranchPoint]
    special: list[SpecialPoint]
    active_param: ActiveParam
    frozen_param_value: float
    truncated: bool = False

    def values(self) -> NDArray[np.float64]:
        return np.array([pt.active_param_value for pt in self.points])

    def of_kind(self, kind: SpecialKind) -> list[SpecialPoint]:
        return [sp for sp in self.special if sp.kind is kind]


class CurveKind(str, Enum):
    FOLD = "FoldCurve"
    HOPF = "HopfCurve"
    HOMOCLINIC = "HomoclinicCurve"
    LPC = "LPCCurve"


@dataclass(frozen=True)
class CurvePoint:
    state: NDArray[np.float64]
    params: Params
    test_fold: float
    test_hopf: float
    eigenvalues: tuple[complex, complex]
    residual: float
    arclength: float
    l1: float | None = None

    @property
    def gamma(self) -> float:
        return self.params.gamma

    @property
    def rho(self) -> float:
        return self.params.rho


@dataclass
class Codim2Curve:
    points: list[CurvePoint]
    kind: CurveKind
    special: list[SpecialPoint] = field(default_factory=list)
    truncated: bool = False

    def of_kind(self, kind: SpecialKind) -> list[SpecialPoint]:
        return [sp for sp in self.special if sp.kind is kind]
