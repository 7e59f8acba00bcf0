"""The fifteen scenario presets and the parameter lines they sit on.

Portrait windows contain the endemic equilibria of each preset; the
``gamma = 0.162`` presets have their endemic states below ``I = 40``, the
others reach ``I`` of about 75.
"""

from ..core.exceptions import UnknownPresetError
from ..schemas.params import ActiveParam, Params
from ..schemas.preset import ExpectedSummary, FamilySpec, ScenarioPreset

WIDE_WINDOW = (0.0, 1000.0, 0.0, 100.0)
LOW_WINDOW = (0.0, 1000.0, 0.0, 40.0)

FAMILIES: dict[str, FamilySpec] = {
    spec.key: spec
    for spec in (
        FamilySpec(
            key="gamma=0.392",
            frozen=ActiveParam.GAMMA,
            frozen_value=0.392,
            active=ActiveParam.RHO,
            range=(0.170, 0.192),
            window=WIDE_WINDOW,
        ),
        FamilySpec(
            key="gamma=0.162",
            frozen=ActiveParam.GAMMA,
            frozen_value=0.162,
            active=ActiveParam.RHO,
            range=(0.0012, 0.0075),
            window=LOW_WINDOW,
        ),
        FamilySpec(
            key="rho=0.13",
            frozen=ActiveParam.RHO,
            frozen_value=0.13,
            active=ActiveParam.GAMMA,
            range=(0.365, 0.38),
            window=WIDE_WINDOW,
        ),
        FamilySpec(
            key="rho=0.137",
            frozen=ActiveParam.RHO,
            frozen_value=0.137,
            active=ActiveParam.GAMMA,
            range=(0.365, 0.38),
            window=WIDE_WINDOW,
        ),
    )
}


def _expected(count: int, cycles: tuple[str, ...], attractors: tuple[str, ...]) -> ExpectedSummary:
    return ExpectedSummary.model_validate({"endemic_count": count, "cycles": cycles, "attractors": attractors})


_BISTABLE = ("E0", "E1")
_CYCLE = ("E0", "cycle")

_TABLE: list[tuple[str, float, float, str, ExpectedSummary, str]] = [
    ("P1", 0.392, 0.19, "gamma=0.392", _expected(2, (), _BISTABLE), "stable spiral e1 and saddle e2 beside e0"),
    ("P2", 0.392, 0.183711, "gamma=0.392", _expected(2, ("homoclinic",), _BISTABLE), "homoclinic loop at e2"),
    ("P3", 0.392, 0.1825, "gamma=0.392", _expected(2, ("unstable",), _BISTABLE), "unstable cycle separatrix"),
    ("P4", 0.392, 0.179, "gamma=0.392", _expected(2, (), ("E0",)), "e1 unstable, no cycle"),
    ("P5", 0.392, 0.173, "gamma=0.392", _expected(0, (), ("E0",)), "no endemic equilibria"),
    ("P6", 0.162, 0.007, "gamma=0.162", _expected(2, (), _BISTABLE), "as P1"),
    ("P7", 0.162, 0.004, "gamma=0.162", _expected(2, ("stable",), _CYCLE), "stable cycle around unstable e1"),
    ("P8", 0.162, 0.002, "gamma=0.162", _expected(2, (), _BISTABLE), "as P6"),
    ("P9", 0.162, 0.001, "gamma=0.162", _expected(0, (), ("E0",)), "only e0"),
    ("P10", 0.3735, 0.137, "rho=0.137", _expected(2, (), _BISTABLE), "as P1"),
    ("P11", 0.369662, 0.13, "rho=0.13", _expected(2, ("homoclinic",), _BISTABLE), "homoclinic loop at e2"),
    ("P12", 0.3699, 0.13, "rho=0.13", _expected(2, ("unstable",), _BISTABLE), "as P3"),
    ("P13", 0.37013, 0.13, "rho=0.13", _expected(2, ("stable", "unstable"), _CYCLE), "two nested cycles"),
    ("P14", 0.370138, 0.13, "rho=0.13", _expected(2, ("semistable",), _CYCLE), "semistable cycle at the LPC"),
    ("P15", 0.3735, 0.13, "rho=0.13", _expected(2, (), ("E0",)), "only e0 attracts"),
]

PRESETS: dict[str, ScenarioPreset] = {
    pid: ScenarioPreset(
        id=pid, gamma=gamma, rho=rho, family=family, window=FAMILIES[family].window, expected=expected, note=note
    )
    for pid, gamma, rho, family, expected, note in _TABLE
}


def get_preset(preset_id: str) -> ScenarioPreset:
    try:
        return PRESETS[preset_id]
    except KeyError:
        raise UnknownPresetError(preset_id) from None


def preset_params(preset: ScenarioPreset, base: Params | None = None) -> Params:
    return (base or Params()).replace(gamma=preset.gamma, rho=preset.rho)


def family_of(preset: ScenarioPreset) -> FamilySpec:
    return FAMILIES[preset.family]
