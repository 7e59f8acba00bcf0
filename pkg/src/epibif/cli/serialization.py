"""Stable on-disk formats: branch/curve CSV, portrait CSV, cycle meshes and JSON reports.

Every writer goes through :func:`~epibif.core.utils.files.atomic_write_text`;
floats carry nine significant digits and lines end in ``\\n`` so repeated runs
give identical bytes.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..core.numerics import eigvals_small
from ..core.utils.files import atomic_write_text, jsonable
from ..models.branch import Branch, Codim2Curve, SpecialPoint
from ..models.cycle import Cycle, CycleBranch
from ..odeflow.orbits import PortraitField
from ..system.vector_field import jacobian_reduced

BRANCH_COLUMNS = [
    "idx",
    "gamma",
    "rho",
    "S",
    "I",
    "test_fold",
    "test_hopf",
    "eig1_re",
    "eig1_im",
    "eig2_re",
    "eig2_im",
    "point_type",
]
PORTRAIT_COLUMNS = ["i", "j", "S", "I", "fate", "label", "period", "transient_time"]
CYCLE_COLUMNS = ["phase", "S", "I"]
TRAJECTORY_COLUMNS = ["traj", "t", "S", "I"]

FLOAT_FORMAT = "%.9g"


def _row(
    gamma: float, rho: float, state: np.ndarray, fold: float, hopf: float, eigs: tuple[complex, ...], kind: str
) -> dict[str, Any]:
    return {
        "gamma": gamma,
        "rho": rho,
        "S": float(state[0]),
        "I": float(state[1]),
        "test_fold": fold,
        "test_hopf": hopf,
        "eig1_re": eigs[0].real,
        "eig1_im": eigs[0].imag,
        "eig2_re": eigs[1].real,
        "eig2_im": eigs[1].imag,
        "point_type": kind,
    }


def _special_row(sp: SpecialPoint) -> dict[str, Any]:
    state = np.asarray(sp.state, dtype=float)[:2]
    jac = jacobian_reduced(state, sp.params)
    eigs = eigvals_small(jac)
    return _row(
        sp.params.gamma,
        sp.params.rho,
        state,
        float(np.linalg.det(jac)),
        float(np.trace(jac)),
        (eigs[0], eigs[1]),
        sp.kind.value,
    )


def _merge(rows: list[tuple[float, dict[str, Any]]], special: list[SpecialPoint]) -> pd.DataFrame:
    """Interleave special-point rows with the regular rows by arclength."""
    tagged = [(s, 0, k, row) for k, (s, row) in enumerate(rows)]
    tagged += [
        (sp.arclength if sp.arclength is not None else float("inf"), 1, k, _special_row(sp))
        for k, sp in enumerate(special)
    ]
    tagged.sort(key=lambda t: (t[0], t[1], t[2]))
    frame = pd.DataFrame([row for *_, row in tagged], columns=BRANCH_COLUMNS[1:])
    frame.insert(0, "idx", np.arange(len(frame), dtype=int))
    return frame


def branch_frame(branch: Branch) -> pd.DataFrame:
    rows = [
        (
            pt.arclength,
            _row(pt.params.gamma, pt.params.rho, pt.state, pt.test_fold, pt.test_hopf, pt.eigenvalues, ""),
        )
        for pt in branch.points
    ]
    return _merge(rows, branch.special)


def curve_frame(curve: Codim2Curve) -> pd.DataFrame:
    """Branch schema plus ``kind`` (the curve type) and ``l1`` (Hopf curves only)."""
    rows = [
        (pt.arclength, _row(pt.gamma, pt.rho, pt.state, pt.test_fold, pt.test_hopf, pt.eigenvalues, ""))
        for pt in curve.points
    ]
    frame = _merge(rows, curve.special)
    frame["kind"] = curve.kind.value
    return frame


def portrait_frame(field: PortraitField) -> pd.DataFrame:
    records = [
        {
            "i": i,
            "j": j,
            "S": s,
            "I": v,
            "fate": fate.kind.value,
            "label": fate.tag,
            "period": fate.period,
            "transient_time": fate.transient_time,
        }
        for i, j, s, v, fate in field.cells()
    ]
    return pd.DataFrame(records, columns=PORTRAIT_COLUMNS)


def cycle_frame(cycle: Cycle) -> pd.DataFrame:
    return pd.DataFrame({"phase": cycle.phase, "S": cycle.mesh[:, 0], "I": cycle.mesh[:, 1]}, columns=CYCLE_COLUMNS)


def trajectories_frame(trajectories: list[np.ndarray]) -> pd.DataFrame:
    """``trajectories[k]`` has rows ``(t, S, I)``."""
    frames = [
        pd.DataFrame({"traj": k, "t": tr[:, 0], "S": tr[:, 1], "I": tr[:, 2]}, columns=TRAJECTORY_COLUMNS)
        for k, tr in enumerate(trajectories)
    ]
    if not frames:
        return pd.DataFrame(columns=TRAJECTORY_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def cycle_summary(cycle: Cycle) -> dict[str, Any]:
    return {
        "gamma": cycle.params.gamma,
        "rho": cycle.params.rho,
        "period": cycle.period,
        "stability": cycle.stability.value,
        "multipliers": list(cycle.multipliers),
        "mean_I": cycle.mean_I,
        "amplitude_I": cycle.amplitude_I,
        "closure_error": cycle.closure_error,
    }


def cycle_branch_meta(branch: CycleBranch) -> dict[str, Any]:
    return {
        "active_param": branch.active_param.value,
        "frozen_value": branch.frozen_param_value,
        "truncated": branch.truncated,
        "cycles": [
            {"value": c.params.value(branch.active_param), "period": c.period, "stability": c.stability.value}
            for c in branch.cycles
        ],
        "special": [special_summary(sp) for sp in branch.special],
    }


def special_summary(sp: SpecialPoint) -> dict[str, Any]:
    return {
        "kind": sp.kind.value,
        "gamma": sp.params.gamma,
        "rho": sp.params.rho,
        "S": float(sp.state[0]),
        "I": float(sp.state[1]),
        "aux": dict(sorted(sp.aux.items())),
    }


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="")


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    return atomic_write_text(path, frame_to_csv(frame))


def dumps_json(payload: BaseModel | dict[str, Any] | list[Any]) -> str:
    data = payload.model_dump(mode="python", by_alias=True) if isinstance(payload, BaseModel) else payload
    return json.dumps(jsonable(data), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(payload: BaseModel | dict[str, Any] | list[Any], path: Path) -> Path:
    return atomic_write_text(path, dumps_json(payload))
