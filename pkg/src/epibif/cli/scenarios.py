"""One-parameter sweeps and the qualitative classification of preset points.

A sweep chains equilibrium continuation, the cycle families born at its Hopf
points and the LPC/HOM points found on those families. The classifier reads
such a sweep at a single parameter value: which cycles cross it, with which
stability, and which invariant sets attract.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import logging

import numpy as np

from ..contin.equilibrium import continue_equilibrium
from ..core.exceptions import EpibifError
from ..cycles.continuation import continue_cycles
from ..cycles.shooting import ShootingSettings, correct_cycle, cycle_from_hopf
from ..models.branch import Branch, SpecialKind, SpecialPoint
from ..models.cycle import Cycle, CycleBranch, CycleStability
from ..models.state import EquilibriumPoint
from ..schemas.config import ContinuationConfig, CyclesConfig
from ..schemas.params import ActiveParam, Params
from ..schemas.preset import ScenarioPreset, ScenarioSummary
from ..system.constants import STATE_SCALE
from ..system.equilibria import all_equilibria, disease_free_equilibrium, endemic_equilibria
from .presets import FAMILIES, family_of, preset_params

logger = logging.getLogger(__name__)

SPECIAL_DEDUP_TOL = 1e-6
SEED_MATCH_TOL = 1e-3
HOPF_COVER_TOL = 1e-2

_CYCLE_TAGS = {
    CycleStability.STABLE: "stable",
    CycleStability.UNSTABLE: "unstable",
    CycleStability.SEMISTABLE: "semistable",
}


@dataclass
class SweepResult:
    base: Params
    active: ActiveParam
    param_range: tuple[float, float]
    branches: list[Branch] = field(default_factory=list)
    cycle_branches: list[CycleBranch] = field(default_factory=list)
    events: list[SpecialPoint] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def frozen_value(self) -> float:
        return self.base.value(self.active.other)

    @property
    def truncated(self) -> bool:
        return any(b.truncated for b in self.branches) or any(c.truncated for c in self.cycle_branches)

    def ordered_events(self, direction: str = "increasing") -> list[SpecialPoint]:
        events = sorted(self.events, key=lambda sp: sp.params.value(self.active))
        return events[::-1] if direction == "decreasing" else events


def shooting_settings(cfg: CyclesConfig) -> ShootingSettings:
    return ShootingSettings(
        segments=cfg.segments,
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        newton_tol=cfg.newton_tol,
        mesh_points=cfg.mesh_points,
    )


def _on_branch(eq: EquilibriumPoint, value: float, branches: list[Branch]) -> bool:
    z = eq.state.as_array()[:2] / STATE_SCALE
    for branch in branches:
        values = branch.values()
        for a, b in zip(branch.points[:-1], branch.points[1:], strict=True):
            va, vb = a.active_param_value, b.active_param_value
            if (va - value) * (vb - value) > 0.0:
                continue
            w = 0.5 if va == vb else (value - va) / (vb - va)
            x = (1.0 - w) * a.state + w * b.state
            if float(np.max(np.abs(x / STATE_SCALE - z))) < SEED_MATCH_TOL:
                return True
        if values.size == 1 and float(np.max(np.abs(branch.points[0].state / STATE_SCALE - z))) < SEED_MATCH_TOL:
            return True
    return False


def _dedup(points: list[SpecialPoint], active: ActiveParam) -> list[SpecialPoint]:
    kept: list[SpecialPoint] = []
    for sp in sorted(points, key=lambda q: q.params.value(active)):
        value = sp.params.value(active)
        if any(q.kind is sp.kind and abs(q.params.value(active) - value) <= SPECIAL_DEDUP_TOL for q in kept):
            continue
        kept.append(sp)
    return kept


def _hopf_covered(hb: SpecialPoint, cycle_branches: list[CycleBranch], span: float) -> bool:
    """Whether an already traced family ends on ``hb``."""
    z_hb = np.asarray(hb.state, dtype=float)[:2] / STATE_SCALE
    value = hb.params.value(hb.active_param or ActiveParam.GAMMA)
    for branch in cycle_branches:
        for end in (branch.cycles[0], branch.cycles[-1]):
            close_value = abs(end.params.value(branch.active_param) - value) <= HOPF_COVER_TOL * span
            if close_value and float(np.linalg.norm(end.seeds[0] - z_hb)) <= HOPF_COVER_TOL:
                return True
    return False


def _equilibrium_branches(
    base: Params, active: ActiveParam, lo: float, hi: float, step: ContinuationConfig, result: SweepResult
) -> None:
    span = hi - lo
    for value in (lo, 0.5 * (lo + hi), hi):
        p = base.with_value(active, value)
        for eq in all_equilibria(p):
            if _on_branch(eq, value, result.branches):
                continue
            try:
                branch = continue_equilibrium(
                    p,
                    eq,
                    active,
                    (lo, hi),
                    step.h0,
                    step.hmax,
                    max_points=step.max_points,
                    p_scale=span,
                )
            except EpibifError as exc:
                logger.warning("Branch from %s at %s=%.6g failed: %s", eq.label.value, active.value, value, exc.message)
                result.failures.append(f"equilibrium {eq.label.value} at {active.value}={value:.6g}: {exc.message}")
                continue
            result.branches.append(branch)


def _cycle_branches(result: SweepResult, hopf_points: list[SpecialPoint], cfg: CyclesConfig) -> None:
    lo, hi = result.param_range
    span = hi - lo
    settings = shooting_settings(cfg)
    for hb in hopf_points:
        value = hb.params.value(result.active)
        if _hopf_covered(hb, result.cycle_branches, span):
            logger.info("Hopf point at %s=%.9g already ends a traced cycle family", result.active.value, value)
            continue
        try:
            start = cycle_from_hopf(hb, cfg.amplitude, active=result.active, settings=settings)
            branch = continue_cycles(
                start,
                result.active,
                (lo, hi),
                cfg.h0,
                cfg.hmax,
                max_points=cfg.max_points,
                p_scale=span,
                period_threshold=cfg.period_threshold,
                settings=settings,
            )
        except EpibifError as exc:
            logger.warning("Cycle family from HB at %s=%.9g failed: %s", result.active.value, value, exc.message)
            result.failures.append(f"cycles from HB at {result.active.value}={value:.9g}: {exc.message}")
            continue
        result.cycle_branches.append(branch)


def run_sweep(
    base: Params,
    active: ActiveParam,
    param_range: tuple[float, float],
    *,
    step: ContinuationConfig | None = None,
    cycles: CyclesConfig | None = None,
) -> SweepResult:
    """Equilibrium branches over ``param_range`` and, unless ``cycles`` is None,
    the cycle families of their Hopf points.

    Sub-step failures are collected in ``failures``; the rest of the sweep
    still runs.
    """
    lo, hi = sorted(param_range)
    step = step or ContinuationConfig(active_param=active, range=(lo, hi))
    result = SweepResult(base=base, active=active, param_range=(lo, hi))
    _equilibrium_branches(base, active, lo, hi, step, result)

    equilibrium_events = _dedup([sp for b in result.branches for sp in b.special], active)
    if cycles is not None:
        hopf_points = [sp for sp in equilibrium_events if sp.kind is SpecialKind.HB]
        _cycle_branches(result, hopf_points, cycles)
    cycle_events = _dedup([sp for c in result.cycle_branches for sp in c.special], active)
    result.events = equilibrium_events + cycle_events
    logger.info(
        "Sweep in %s over [%.6g, %.6g]: %d branches, %d cycle families, %d events",
        active.value,
        lo,
        hi,
        len(result.branches),
        len(result.cycle_branches),
        len(result.events),
    )
    return result


@lru_cache(maxsize=8)
def _family_sweep(key: str, base_json: str, cycles_json: str) -> SweepResult:
    family = FAMILIES[key]
    base = Params.model_validate_json(base_json).with_value(family.frozen, family.frozen_value)
    cfg = CyclesConfig.model_validate_json(cycles_json)
    return run_sweep(base, family.active, family.range, cycles=cfg)


def analyze_family(key: str, base: Params | None = None, cycles: CyclesConfig | None = None) -> SweepResult:
    """Full sweep along a preset family; repeated calls with the same inputs are cached."""
    base = base or Params()
    cycles = cycles or CyclesConfig()
    return _family_sweep(key, base.model_dump_json(), cycles.model_dump_json())


@dataclass(frozen=True)
class CycleCrossing:
    cycle: Cycle
    tag: str
    corrected: bool


def _interpolated(a: Cycle, b: Cycle, w: float, p: Params) -> Cycle:
    seeds = (1.0 - w) * a.seeds + w * b.seeds if a.seeds.shape == b.seeds.shape else (a.seeds if w < 0.5 else b.seeds)
    near = a if w < 0.5 else b
    mesh = (1.0 - w) * a.mesh + w * b.mesh if a.mesh.shape == b.mesh.shape else near.mesh
    period = (1.0 - w) * a.period + w * b.period
    return Cycle(mesh, period, p, near.multipliers, near.stability, seeds, near.residual)


def cycles_at(branch: CycleBranch, p: Params, settings: ShootingSettings | None = None) -> list[CycleCrossing]:
    """Cycles of ``branch`` at the parameter value of ``p``, corrected at fixed parameters.

    A crossing that fails to correct is kept as the interpolation between
    its neighbours on the branch.
    """
    value = p.value(branch.active_param)
    values = branch.values()
    found: list[CycleCrossing] = []
    for i in range(values.size - 1):
        va, vb = float(values[i]), float(values[i + 1])
        if (va - value) * (vb - value) > 0.0 or va == vb:
            continue
        if vb == value and i + 1 < values.size - 1:
            # counted as the start of the next segment
            continue
        w = (value - va) / (vb - va)
        guess = _interpolated(branch.cycles[i], branch.cycles[i + 1], w, p)
        try:
            cycle = correct_cycle(p, guess.seeds, guess.period, settings)
            corrected = True
        except EpibifError as exc:
            logger.warning(
                "Cycle at %s=%.9g did not correct (%s); using the branch interpolation",
                branch.active_param.value,
                value,
                exc.message,
            )
            cycle, corrected = guess, False
        found.append(CycleCrossing(cycle, _CYCLE_TAGS[cycle.stability], corrected))
    return found


def _near_homoclinic(branch: CycleBranch, value: float, tol: float) -> bool:
    for hom in branch.of_kind(SpecialKind.HOM):
        p_hom = hom.params.value(branch.active_param)
        end = branch.cycles[0] if branch.cycles[0].period > branch.cycles[-1].period else branch.cycles[-1]
        p_end = end.params.value(branch.active_param)
        between = min(p_hom, p_end) - tol <= value <= max(p_hom, p_end) + tol
        if abs(value - p_hom) <= tol or between:
            return True
    return False


def _near_lpc(branch: CycleBranch, value: float, tol: float) -> Cycle | None:
    for lpc in branch.of_kind(SpecialKind.LPC):
        if abs(lpc.params.value(branch.active_param) - value) <= tol:
            return min(branch.cycles, key=lambda c: abs(c.params.value(branch.active_param) - value))
    return None


def classify_point(
    p: Params,
    sweep: SweepResult,
    cycles_cfg: CyclesConfig | None = None,
) -> tuple[ScenarioSummary, list[Cycle]]:
    """Qualitative summary of ``p`` read off ``sweep``, plus the cycles found there.

    Cycles are ordered by amplitude (innermost first). A family within
    ``homoclinic_tol`` of its HOM end counts once as ``homoclinic``; one
    within ``semistable_tol`` of an LPC counts once as ``semistable``.
    """
    cfg = cycles_cfg or CyclesConfig()
    settings = shooting_settings(cfg)
    value = p.value(sweep.active)
    entries: list[tuple[float, str, Cycle]] = []
    homoclinic = semistable = False
    for branch in sweep.cycle_branches:
        if _near_homoclinic(branch, value, cfg.homoclinic_tol):
            homoclinic = True
            end = max(branch.cycles, key=lambda c: c.period)
            entries.append((end.amplitude_I, "homoclinic", end))
            continue
        fold = _near_lpc(branch, value, cfg.semistable_tol)
        if fold is not None:
            semistable = True
            entries.append((fold.amplitude_I, "semistable", fold.with_stability(CycleStability.SEMISTABLE)))
            continue
        entries.extend((c.cycle.amplitude_I, c.tag, c.cycle) for c in cycles_at(branch, p, settings))
    entries.sort(key=lambda e: e[0])

    endemic = endemic_equilibria(p)
    attractors: list[str] = []
    if disease_free_equilibrium(p).stability.is_stable:
        attractors.append("E0")
    if endemic and endemic[-1].stability.is_stable:
        attractors.append("E1")
    if any(tag in ("stable", "semistable") for _, tag, _ in entries):
        attractors.append("cycle")

    cycles = [c for _, tag, c in entries if tag != "homoclinic"]
    summary = ScenarioSummary(
        id="",
        gamma=p.gamma,
        rho=p.rho,
        endemic_count=len(endemic),
        cycles=tuple(tag for _, tag, _ in entries),
        attractors=tuple(attractors),
        homoclinic=homoclinic,
        semistable=semistable,
        periods=tuple(c.period for _, _, c in entries),
    )
    return summary, cycles


def classify_preset(
    preset: ScenarioPreset, base: Params | None = None, cycles_cfg: CyclesConfig | None = None
) -> tuple[ScenarioSummary, list[Cycle]]:
    """Classify ``preset`` from its family sweep and compare with the expected summary."""
    cfg = cycles_cfg or CyclesConfig()
    p = preset_params(preset, base)
    sweep = analyze_family(family_of(preset).key, base, cfg)
    summary, cycles = classify_point(p, sweep, cfg)
    expected = preset.expected
    matches = (
        summary.endemic_count == expected.endemic_count
        and summary.cycles == expected.cycles
        and summary.attractors == expected.attractors
    )
    if not matches:
        logger.warning("Preset %s classified as %s; expected %s", preset.id, summary.cycles, expected.cycles)
    return summary.model_copy(update={"id": preset.id, "matches": matches}), cycles
