import json
import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np

from ..codim2.curves import continue_fold_curve, continue_hopf_curve
from ..core.config import settings
from ..core.exceptions import ConfigError, EpibifError
from ..core.utils.files import atomic_write_text
from ..core.utils.parallel import map_ordered
from ..cycles.shooting import correct_cycle
from ..models.branch import Codim2Curve, SpecialKind, SpecialPoint
from ..models.cycle import Cycle
from ..models.state import EquilibriumPoint, Stability
from ..models.trajectory import FateKind
from ..odeflow.integrator import integrate, integrate_flow
from ..odeflow.manifolds import ManifoldBranch, saddle_manifolds
from ..odeflow.orbits import PortraitField, phase_portrait
from ..schemas.config import CyclesConfig, RunConfig, run_config_schema
from ..schemas.params import ActiveParam, Params
from ..schemas.preset import ScenarioPreset, ScenarioSummary
from ..schemas.report import (
    CurveSummary,
    DiagramReport,
    Eigenvalue,
    EquilibriaReport,
    EquilibriumEntry,
    PortraitReport,
    PresetCheckReport,
    SweepEvent,
    SweepReport,
)
from ..system.constants import DEFAULT_PORTRAIT_WINDOW, STATE_SCALE, ZOOM_WINDOWS
from ..system.equilibria import all_equilibria, disease_free_equilibrium, endemic_equilibria, is_backward
from ..system.vector_field import planar_field, r0
from . import plotting, serialization
from .presets import FAMILIES, PRESETS, family_of, get_preset, preset_params
from .scenarios import analyze_family, classify_preset, run_sweep, shooting_settings

logger = logging.getLogger(__name__)

TRAJECTORY_SPAN = 400.0
TRAJECTORY_SAMPLES = 400


def _deep_merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Merge a JSON config file with flag overrides and validate the result.

    Parameters
    ----------
    path: Path | None
        JSON file with any subset of :class:`RunConfig` keys.
    overrides: dict[str, Any] | None
        Nested values from the command line; they win over the file.

    Returns
    -------
    RunConfig
        The validated configuration.

    Raises
    ------
    ConfigError
        If the file is missing or not a JSON object. Invalid values surface
        as pydantic ``ValidationError``.
    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError("Config file not found.", {"path": str(path)}) from None
        except json.JSONDecodeError as exc:
            raise ConfigError("Config file is not valid JSON.", {"path": str(path), "error": str(exc)}) from None
        if not isinstance(data, dict):
            raise ConfigError("Config file must hold a JSON object.", {"path": str(path)})
    return RunConfig.model_validate(_deep_merge(data, overrides or {}))


def out_dir(cfg: RunConfig) -> Path:
    return cfg.out_dir or settings.EPIBIF_OUT_DIR


def _preset(cfg: RunConfig) -> ScenarioPreset | None:
    return get_preset(cfg.preset) if cfg.preset else None


def resolved_params(cfg: RunConfig) -> Params:
    """Model parameters of the run: the preset's ``(gamma, rho)`` over the configured rates."""
    preset = _preset(cfg)
    return preset_params(preset, cfg.params) if preset is not None else cfg.params


def _stem(cfg: RunConfig, command: str) -> str:
    return f"{command}-{cfg.preset}" if cfg.preset else command


def _entry(eq: EquilibriumPoint) -> EquilibriumEntry:
    return EquilibriumEntry(
        label=eq.label.value,
        S=eq.state.S,
        I=eq.state.I,
        R=eq.state.R,
        stability=eq.stability.value,
        eigenvalues=[Eigenvalue.of(complex(v)) for v in eq.eigenvalues],
        residual=eq.residual,
    )


def cmd_equilibria(cfg: RunConfig) -> EquilibriaReport:
    """Disease-free and endemic equilibria with eigenvalues, classes and ``R0``.

    Parameters
    ----------
    cfg: RunConfig
        Validated run configuration; ``preset`` overrides ``params.gamma/rho``.

    Returns
    -------
    EquilibriaReport
        The report, also written to ``<out>/equilibria[-<preset>].report.json``.
    """
    p = resolved_params(cfg)
    report = EquilibriaReport(
        preset=cfg.preset,
        params=p.to_wire(),
        r0=r0(p),
        backward=is_backward(p),
        disease_free=_entry(disease_free_equilibrium(p, full=True)),
        endemic=[_entry(eq) for eq in endemic_equilibria(p, full=True)],
    )
    serialization.write_json(report, out_dir(cfg) / f"{_stem(cfg, 'equilibria')}.report.json")
    return report


def _event(sp: SpecialPoint, active: ActiveParam) -> SweepEvent:
    return SweepEvent(
        kind=sp.kind.value,
        value=sp.params.value(active),
        gamma=sp.params.gamma,
        rho=sp.params.rho,
        aux=dict(sorted(sp.aux.items())),
    )


def _curve_task(task: tuple[str, SpecialPoint, float, float, int]) -> tuple[Codim2Curve | None, str | None]:
    kind, seed, h0, hmax, max_points = task
    trace = continue_fold_curve if kind == "fold" else continue_hopf_curve
    try:
        return trace(seed, h0, hmax, max_points=max_points), None
    except EpibifError as exc:
        gamma, rho = seed.location
        logger.warning("%s curve from gamma=%.6g rho=%.6g failed: %s", kind, gamma, rho, exc.message)
        return None, f"{kind} curve: {exc.message}"


def _seeds(cfg: RunConfig) -> tuple[list[SpecialPoint], list[str]]:
    """LP and HB points of a ``gamma`` sweep at ``rho = seed_rho``; one per kind."""
    d = cfg.diagram
    base = cfg.params.replace(rho=d.seed_rho)
    step = cfg.continuation.model_copy(update={"active_param": ActiveParam.GAMMA, "range": d.seed_gamma_range})
    sweep = run_sweep(base, ActiveParam.GAMMA, d.seed_gamma_range, step=step)
    seeds: list[SpecialPoint] = []
    for kind in (SpecialKind.LP, SpecialKind.HB):
        found = [sp for sp in sweep.ordered_events() if sp.kind is kind]
        if found:
            seeds.append(found[-1])
        else:
            sweep.failures.append(f"no {kind.value} point at rho={d.seed_rho:.6g} to seed a curve")
    return seeds, sweep.failures


def _cycle_samples(cfg: RunConfig) -> tuple[list[tuple[float, float]], list[tuple[float, float]], list[str]]:
    hom: list[tuple[float, float]] = []
    lpc: list[tuple[float, float]] = []
    failures: list[str] = []
    for key in FAMILIES:
        sweep = analyze_family(key, cfg.params, cfg.cycles)
        failures.extend(sweep.failures)
        for sp in sweep.events:
            if sp.kind is SpecialKind.HOM:
                hom.append(sp.location)
            elif sp.kind is SpecialKind.LPC:
                lpc.append(sp.location)
    return sorted(hom), sorted(lpc), failures


def cmd_diagram(cfg: RunConfig) -> DiagramReport:
    """Fold and Hopf curves with BT/GH points, as CSV files and one SVG.

    Parameters
    ----------
    cfg: RunConfig
        ``diagram`` holds the window (or named zoom), the seed sweep and the
        curve step sizes.

    Returns
    -------
    DiagramReport
        Curve files, special points and the failures of individual curves.
    """
    d = cfg.diagram
    window = ZOOM_WINDOWS[d.zoom] if d.zoom else d.window
    target = out_dir(cfg)
    seeds, failures = _seeds(cfg)
    tasks = [("fold" if sp.kind is SpecialKind.LP else "hopf", sp, d.h0, d.hmax, d.max_points) for sp in seeds]
    results = map_ordered(_curve_task, tasks, cfg.workers or settings.PARALLEL_WORKERS)

    curves: list[Codim2Curve] = []
    summaries: list[CurveSummary] = []
    for (kind, *_), (curve, error) in zip(tasks, results, strict=True):
        if curve is None:
            failures.append(error or f"{kind} curve failed")
            continue
        name = f"{kind}-{len(curves) + 1}.branch.csv"
        serialization.write_csv(serialization.curve_frame(curve), target / name)
        curves.append(curve)
        summaries.append(
            CurveSummary(
                kind=curve.kind.value,
                file=name,
                points=len(curve.points),
                truncated=curve.truncated,
                special=[_event(sp, ActiveParam.GAMMA) for sp in curve.special],
            )
        )

    hom: list[tuple[float, float]] = []
    lpc: list[tuple[float, float]] = []
    if d.cycle_samples:
        hom, lpc, sample_failures = _cycle_samples(cfg)
        failures.extend(sample_failures)
    svg_name = f"diagram-{d.zoom}.svg" if d.zoom else "diagram.svg"
    fig = plotting.diagram_figure(curves, window, hom_samples=hom, lpc_samples=lpc)
    atomic_write_text(target / svg_name, plotting.render_svg(fig))

    report = DiagramReport(window=window, curves=summaries, failures=failures, svg=svg_name)
    serialization.write_json(report, target / "diagram.report.json")
    return report


def _cycles_from_fates(p: Params, field: PortraitField, cfg: CyclesConfig) -> list[Cycle]:
    """Stable cycles reached by grid orbits, corrected by shooting."""
    f = planar_field(p)

    def rise(_t: float, y: np.ndarray) -> float:
        return float(f(0.0, y)[1])

    found: list[Cycle] = []
    for _i, _j, s, i, fate in field.cells():
        if fate.kind is not FateKind.TO_CYCLE or fate.period is None:
            continue
        if any(abs(c.period - fate.period) <= 1e-3 * c.period for c in found):
            continue
        t_end = fate.transient_time + 2.0 * fate.period
        flow = integrate_flow(f, np.array([s, i]), (0.0, t_end), 1e-10, 1e-12, event=rise, event_direction=-1)
        if not flow.event_states:
            continue
        z0 = flow.event_states[-1] / STATE_SCALE
        try:
            found.append(correct_cycle(p, z0[None, :], fate.period, shooting_settings(cfg)))
        except EpibifError as exc:
            logger.warning("Cycle from cell (%.6g, %.6g) did not correct: %s", s, i, exc.message)
    return found


def _manifolds(
    equilibria: list[EquilibriumPoint],
    which: Literal["stable", "unstable", "both"],
    window: tuple[float, float, float, float],
) -> list[ManifoldBranch]:
    branches: list[ManifoldBranch] = []
    for eq in equilibria:
        if eq.stability is Stability.SADDLE:
            branches.extend(saddle_manifolds(eq, which, box=window))
    return branches


def _trajectories(cfg: RunConfig, p: Params, field: PortraitField) -> list[np.ndarray]:
    stride = cfg.portrait.trajectory_stride
    if stride <= 0:
        return []
    t_end = min(cfg.portrait.budget, TRAJECTORY_SPAN)
    t_eval = np.linspace(0.0, t_end, TRAJECTORY_SAMPLES)
    out: list[np.ndarray] = []
    for i, j, s, v, _fate in field.cells():
        if i % stride or j % stride:
            continue
        try:
            tr = integrate(p, [s, v], t_end, cfg.portrait.rel_tol, cfg.portrait.abs_tol, t_eval=t_eval)
        except EpibifError as exc:
            logger.warning("Trajectory from (%.6g, %.6g) skipped: %s", s, v, exc.message)
            continue
        out.append(np.column_stack([tr.sample_times, tr.sample_states]))
    return out


def cmd_portrait(cfg: RunConfig) -> PortraitReport:
    """Phase portrait: fate grid, equilibria, cycles, separatrices and sample orbits.

    Parameters
    ----------
    cfg: RunConfig
        ``portrait`` holds grid, budget and overlay options; with a preset its
        window and its classified cycles are used.

    Returns
    -------
    PortraitReport
        Fate counts, cycle summaries and the files written.
    """
    pc = cfg.portrait
    preset = _preset(cfg)
    p = resolved_params(cfg)
    window = pc.window or (preset.window if preset is not None else DEFAULT_PORTRAIT_WINDOW)
    target = out_dir(cfg)
    stem = _stem(cfg, "portrait")

    workers = cfg.workers or settings.PARALLEL_WORKERS
    field = phase_portrait(p, window, pc.grid, pc.budget, workers=workers, rel_tol=pc.rel_tol, abs_tol=pc.abs_tol)
    equilibria = all_equilibria(p)
    cycles: list[Cycle] = []
    if pc.cycles:
        if preset is not None:
            _summary, cycles = classify_preset(preset, cfg.params, cfg.cycles)
        else:
            cycles = _cycles_from_fates(p, field, cfg.cycles)
    manifolds = [] if pc.separatrix == "none" else _manifolds(equilibria, pc.separatrix, window)
    trajectories = _trajectories(cfg, p, field)

    files = [f"{stem}.csv"]
    serialization.write_csv(serialization.portrait_frame(field), target / files[0])
    if trajectories:
        files.append(f"{stem}.trajectories.csv")
        serialization.write_csv(serialization.trajectories_frame(trajectories), target / files[-1])
    for k, cycle in enumerate(cycles, start=1):
        files.append(f"{stem}-{k}.cycle.csv")
        serialization.write_csv(serialization.cycle_frame(cycle), target / files[-1])
    fig = plotting.portrait_figure(
        field, window, equilibria=equilibria, cycles=cycles, manifolds=manifolds, trajectories=trajectories
    )
    files.append(f"{stem}.svg")
    atomic_write_text(target / files[-1], plotting.render_svg(fig))

    fates: dict[str, int] = {}
    for *_, fate in field.cells():
        fates[fate.tag] = fates.get(fate.tag, 0) + 1
    report = PortraitReport(
        preset=cfg.preset,
        params=p.to_wire(),
        window=window,
        grid=pc.grid,
        fates=dict(sorted(fates.items())),
        cycles=[serialization.cycle_summary(c) for c in cycles],
        files=files,
    )
    serialization.write_json(report, target / f"{stem}.report.json")
    return report


def cmd_sweep(cfg: RunConfig) -> SweepReport:
    """Ordered codimension-one events along a line in the ``(gamma, rho)`` plane.

    With a preset the sweep follows the preset's family line and range;
    otherwise ``sweep.active_param`` varies over ``sweep.range`` with the other
    parameter taken from ``params``.
    """
    sc = cfg.sweep
    preset = _preset(cfg)
    if preset is not None:
        family = family_of(preset)
        active, param_range = family.active, family.range
        base = cfg.params.with_value(family.frozen, family.frozen_value)
    else:
        active, param_range, base = sc.active_param, sc.range, cfg.params
    step = cfg.continuation.model_copy(update={"active_param": active, "range": param_range})
    result = run_sweep(base, active, param_range, step=step, cycles=cfg.cycles if sc.cycles else None)

    target = out_dir(cfg)
    stem = _stem(cfg, "sweep")
    for k, branch in enumerate(result.branches, start=1):
        serialization.write_csv(serialization.branch_frame(branch), target / f"{stem}-{k}.branch.csv")
    for k, cycle_branch in enumerate(result.cycle_branches, start=1):
        serialization.write_json(serialization.cycle_branch_meta(cycle_branch), target / f"{stem}-cycles-{k}.json")

    report = SweepReport(
        preset=cfg.preset,
        active_param=active.value,
        frozen_param=active.other.value,
        frozen_value=base.value(active.other),
        range=param_range,
        direction=sc.direction,
        events=[_event(sp, active) for sp in result.ordered_events(sc.direction)],
        equilibrium_branches=len(result.branches),
        cycle_branches=len(result.cycle_branches),
        truncated=result.truncated,
        failures=result.failures,
    )
    serialization.write_json(report, target / f"{stem}.report.json")
    return report


def cmd_presets_list() -> list[dict[str, Any]]:
    return [preset.model_dump(mode="json") for preset in PRESETS.values()]


def _check_family(task: tuple[str, list[str], Params, CyclesConfig]) -> list[ScenarioSummary]:
    _key, ids, base, cycles_cfg = task
    return [classify_preset(PRESETS[pid], base, cycles_cfg)[0] for pid in ids]


def cmd_presets_check(cfg: RunConfig, ids: list[str] | None = None) -> PresetCheckReport:
    """Classify presets and compare with their expected summaries.

    Families are analysed once each, in parallel when ``workers > 1``.
    """
    chosen = [get_preset(pid) for pid in ids] if ids else list(PRESETS.values())
    by_family: dict[str, list[str]] = {}
    for preset in chosen:
        by_family.setdefault(preset.family, []).append(preset.id)
    tasks = [(key, pids, cfg.params, cfg.cycles) for key, pids in by_family.items()]
    summaries = {s.id: s for batch in map_ordered(_check_family, tasks, cfg.workers or 1) for s in batch}
    results = [summaries[p.id] for p in chosen]
    report = PresetCheckReport(results=results, all_match=all(bool(r.matches) for r in results))
    serialization.write_json(report, out_dir(cfg) / "presets-check.report.json")
    return report


def cmd_schema() -> dict[str, Any]:
    return run_config_schema()
