"""Per-run configuration.

A JSON config file and the command-line flags are merged into one dict and
validated once as :class:`RunConfig`. Unknown keys are rejected at every
level, so a typo fails before any computation starts.
"""

from pathlib import Path
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..system.constants import DEFAULT_BUDGET, DIAGRAM_WINDOW
from .params import ActiveParam, Params

Window = tuple[float, float, float, float]
ZoomName = Literal["BT1", "BT2", "GH1", "GH2"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _check_window(window: Window | None) -> None:
    if window is not None and not (window[0] < window[1] and window[2] < window[3]):
        raise ValueError("window must be (x_min, x_max, y_min, y_max) with min < max")


class ContinuationConfig(_Section):
    active_param: ActiveParam = ActiveParam.GAMMA
    range: tuple[float, float] = (0.3, 0.42)
    h0: Annotated[float, Field(gt=0)] = 1e-3
    hmax: Annotated[float, Field(gt=0)] = 1e-2
    max_points: Annotated[int, Field(ge=2, le=100_000)] = 2000

    @model_validator(mode="after")
    def _ordered(self) -> "ContinuationConfig":
        if not self.range[0] < self.range[1]:
            raise ValueError("range must be increasing")
        if self.h0 > self.hmax:
            raise ValueError("h0 must not exceed hmax")
        return self


class DiagramConfig(_Section):
    window: Window = DIAGRAM_WINDOW
    zoom: ZoomName | None = None
    seed_rho: Annotated[float, Field(ge=0, le=1)] = 0.1
    seed_gamma_range: tuple[float, float] = (0.3, 0.42)
    h0: Annotated[float, Field(gt=0)] = 1e-3
    hmax: Annotated[float, Field(gt=0)] = 5e-3
    max_points: Annotated[int, Field(ge=2, le=100_000)] = 4000
    cycle_samples: Annotated[
        bool, Field(description="add HOM and LPC points from the preset families (slow)")
    ] = False

    @model_validator(mode="after")
    def _valid_window(self) -> "DiagramConfig":
        _check_window(self.window)
        return self


class PortraitConfig(_Section):
    window: Window | None = None
    grid: tuple[Annotated[int, Field(ge=1, le=200)], Annotated[int, Field(ge=1, le=200)]] = (20, 20)
    budget: Annotated[float, Field(gt=0)] = DEFAULT_BUDGET
    rel_tol: Annotated[float, Field(ge=1e-12, le=1e-3)] = 1e-8
    abs_tol: Annotated[float, Field(ge=1e-12, le=1e-3)] = 1e-10
    separatrix: Literal["stable", "unstable", "both", "none"] = "stable"
    trajectory_stride: Annotated[
        int, Field(ge=0, description="sample every n-th cell in each direction; 0 disables")
    ] = 5
    cycles: bool = True

    @model_validator(mode="after")
    def _valid_window(self) -> "PortraitConfig":
        _check_window(self.window)
        return self


class SweepConfig(_Section):
    active_param: ActiveParam = ActiveParam.RHO
    range: tuple[float, float] = (0.170, 0.192)
    direction: Literal["increasing", "decreasing"] = "decreasing"
    cycles: bool = True

    @model_validator(mode="after")
    def _ordered(self) -> "SweepConfig":
        if not self.range[0] < self.range[1]:
            raise ValueError("range must be increasing")
        return self


class CyclesConfig(_Section):
    amplitude: Annotated[float, Field(gt=0, le=0.5)] = 1e-2
    mesh_points: Annotated[int, Field(ge=3, le=10_000)] = 100
    segments: Annotated[int, Field(ge=1, le=7)] = 1
    rel_tol: Annotated[float, Field(ge=1e-13, le=1e-6)] = 1e-10
    abs_tol: Annotated[float, Field(ge=1e-14, le=1e-6)] = 1e-12
    newton_tol: Annotated[float, Field(gt=0, le=1e-6)] = 1e-9
    period_threshold: Annotated[float, Field(gt=0)] = 1000.0
    h0: Annotated[float, Field(gt=0)] = 1e-2
    hmax: Annotated[float, Field(gt=0)] = 0.1
    max_points: Annotated[int, Field(ge=2, le=10_000)] = 400
    semistable_tol: Annotated[float, Field(ge=0)] = 4e-6
    homoclinic_tol: Annotated[float, Field(ge=0)] = 1e-4


class RunConfig(_Section):
    params: Params = Params()
    preset: Annotated[str | None, Field(pattern=r"^P([1-9]|1[0-5])$", examples=["P13"])] = None
    out_dir: Path | None = None
    workers: Annotated[int | None, Field(ge=1, le=256)] = None
    continuation: ContinuationConfig = ContinuationConfig()
    diagram: DiagramConfig = DiagramConfig()
    portrait: PortraitConfig = PortraitConfig()
    sweep: SweepConfig = SweepConfig()
    cycles: CyclesConfig = CyclesConfig()


def run_config_schema() -> dict[str, Any]:
    """JSON schema of :class:`RunConfig` (the published config schema)."""
    schema = RunConfig.model_json_schema(by_alias=True)
    schema["title"] = "epibif run configuration"
    return schema
