from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field

from .params import ActiveParam

CycleKindTag = Literal["stable", "unstable", "semistable", "homoclinic"]
AttractorTag = Literal["E0", "E1", "cycle"]
Window = tuple[float, float, float, float]


class FamilySpec(BaseModel):
    """A one-parameter line through the preset points.

    ``frozen`` stays at ``frozen_value`` while ``active`` sweeps ``range``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    key: Annotated[str, Field(examples=["gamma=0.392"])]
    frozen: ActiveParam
    frozen_value: float
    active: ActiveParam
    range: tuple[float, float]
    window: Window


class ExpectedSummary(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    endemic_count: Annotated[int, Field(ge=0, le=3)]
    cycles: tuple[CycleKindTag, ...] = ()
    attractors: tuple[AttractorTag, ...]


class ScenarioPreset(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: Annotated[str, Field(pattern=r"^P([1-9]|1[0-5])$", examples=["P1"])]
    gamma: Annotated[float, Field(ge=0, le=1)]
    rho: Annotated[float, Field(ge=0, le=1)]
    family: str
    window: Window
    expected: ExpectedSummary
    note: str = ""


class ScenarioSummary(BaseModel):
    """What the analysis finds at a preset point."""

    model_config = ConfigDict(extra="forbid")

    id: str
    gamma: float
    rho: float
    endemic_count: int
    cycles: tuple[str, ...]
    attractors: tuple[str, ...]
    homoclinic: bool = False
    semistable: bool = False
    periods: tuple[float, ...] = ()
    matches: bool | None = None
