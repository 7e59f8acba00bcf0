from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from .preset import ScenarioSummary


class _Report(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Eigenvalue(_Report):
    re: float
    im: float

    @classmethod
    def of(cls, value: complex) -> "Eigenvalue":
        return cls(re=float(value.real), im=float(value.imag))


class EquilibriumEntry(_Report):
    label: str
    S: float
    I: float
    R: float | None = None
    stability: str
    eigenvalues: list[Eigenvalue]
    residual: float


class EquilibriaReport(_Report):
    preset: str | None = None
    params: dict[str, float]
    r0: float
    backward: bool
    disease_free: EquilibriumEntry
    endemic: list[EquilibriumEntry] = Field(default_factory=list)


class SweepEvent(_Report):
    kind: str
    value: float
    gamma: float
    rho: float
    aux: dict[str, Any] = Field(default_factory=dict)


class SweepReport(_Report):
    preset: str | None = None
    active_param: str
    frozen_param: str
    frozen_value: float
    range: tuple[float, float]
    direction: str
    events: list[SweepEvent] = Field(default_factory=list)
    equilibrium_branches: int = 0
    cycle_branches: int = 0
    truncated: bool = False
    failures: list[str] = Field(default_factory=list)


class CurveSummary(_Report):
    kind: str
    file: str
    points: int
    truncated: bool
    special: list[SweepEvent] = Field(default_factory=list)


class DiagramReport(_Report):
    window: tuple[float, float, float, float]
    curves: list[CurveSummary] = Field(default_factory=list)
    failures: list[str] = Field(default_factory=list)
    svg: str


class PortraitReport(_Report):
    preset: str | None = None
    params: dict[str, float]
    window: tuple[float, float, float, float]
    grid: tuple[int, int]
    fates: dict[str, int]
    cycles: list[dict[str, Any]] = Field(default_factory=list)
    files: list[str] = Field(default_factory=list)


class PresetCheckReport(_Report):
    results: list[ScenarioSummary]
    all_match: bool
