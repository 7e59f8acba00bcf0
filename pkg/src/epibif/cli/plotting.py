"""Deterministic SVG rendering of bifurcation diagrams and phase portraits."""

import io
from typing import Any

import matplotlib

matplotlib.use("Agg")

from matplotlib.axes import Axes
from matplotlib.figure import Figure
import numpy as np

from ..models.branch import Codim2Curve, CurveKind, SpecialKind, SpecialPoint
from ..models.cycle import Cycle, CycleStability
from ..models.state import EquilibriumPoint, Stability
from ..odeflow.manifolds import ManifoldBranch
from ..odeflow.orbits import PortraitField

SVG_RC: dict[str, Any] = {
    "svg.hashsalt": "epibif",
    "svg.fonttype": "none",
    "path.simplify": False,
}

FOLD_COLOR = "tab:blue"
HOPF_COLOR = "black"
HOM_COLOR = "tab:red"
LPC_COLOR = "tab:green"

FATE_COLORS = {
    "E0": "#4c72b0",
    "E1": "#dd8452",
    "E2": "#55a868",
    "E3": "#8172b3",
    "cycle": "#c44e52",
    "undecided": "#bbbbbb",
}
EQUILIBRIUM_MARKERS = {
    Stability.STABLE_NODE: ("o", "black"),
    Stability.STABLE_SPIRAL: ("o", "black"),
    Stability.SADDLE: ("X", "black"),
    Stability.UNSTABLE_NODE: ("o", "white"),
    Stability.UNSTABLE_SPIRAL: ("o", "white"),
    Stability.NON_HYPERBOLIC: ("D", "grey"),
}
CYCLE_STYLES = {
    CycleStability.STABLE: "-",
    CycleStability.UNSTABLE: "--",
    CycleStability.SEMISTABLE: "-.",
}


def render_svg(fig: Figure) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def hopf_runs(curve: Codim2Curve) -> list[tuple[bool, list[tuple[float, float]]]]:
    """Split a Hopf curve into runs of constant criticality.

    Returns ``(subcritical, points)`` pairs. GH points close one run and open
    the next; points without an ``l1`` value (neutral saddles) end a run.
    """
    items: list[tuple[float, tuple[float, float], float | None, bool]] = [
        (pt.arclength, (pt.gamma, pt.rho), pt.l1, False) for pt in curve.points
    ]
    items += [
        (sp.arclength or 0.0, (sp.params.gamma, sp.params.rho), 0.0, True) for sp in curve.of_kind(SpecialKind.GH)
    ]
    items.sort(key=lambda it: it[0])

    runs: list[tuple[bool, list[tuple[float, float]]]] = []
    current: list[tuple[float, float]] = []
    sign: bool | None = None
    for _s, xy, l1, is_gh in items:
        if is_gh:
            current.append(xy)
            if sign is not None:
                runs.append((sign, current))
            current, sign = [xy], None
            continue
        if l1 is None:
            if sign is not None and len(current) > 1:
                runs.append((sign, current))
            current, sign = [], None
            continue
        sub = l1 > 0.0
        if sign is None or sub == sign:
            sign = sub
            current.append(xy)
            continue
        runs.append((sign, current))
        current, sign = [current[-1], xy], sub
    if sign is not None and len(current) > 1:
        runs.append((sign, current))
    return runs


def _plot_xy(ax: Axes, points: list[tuple[float, float]], **style: Any) -> None:
    if points:
        xy = np.asarray(points)
        ax.plot(xy[:, 0], xy[:, 1], **style)


def diagram_figure(
    curves: list[Codim2Curve],
    window: tuple[float, float, float, float],
    *,
    hom_samples: list[tuple[float, float]] | None = None,
    lpc_samples: list[tuple[float, float]] | None = None,
) -> Figure:
    fig = Figure(figsize=(7.0, 5.5))
    ax = fig.add_subplot()
    for curve in curves:
        if curve.kind is CurveKind.FOLD:
            _plot_xy(ax, [(pt.gamma, pt.rho) for pt in curve.points], color=FOLD_COLOR, lw=1.2)
        elif curve.kind is CurveKind.HOPF:
            for subcritical, run in hopf_runs(curve):
                _plot_xy(ax, run, color=HOPF_COLOR, lw=1.2, ls="--" if subcritical else "-")
    _plot_xy(ax, hom_samples or [], color=HOM_COLOR, lw=0, marker=".", ms=4)
    _plot_xy(ax, lpc_samples or [], color=LPC_COLOR, lw=0, marker=".", ms=4)

    labels = _codim2_labels([sp for c in curves for sp in c.special])
    for name, sp in labels:
        ax.plot([sp.params.gamma], [sp.params.rho], marker="o", color="black", ms=5)
        ax.annotate(name, (sp.params.gamma, sp.params.rho), textcoords="offset points", xytext=(4, 4), fontsize=8)

    gamma_lo, gamma_hi, rho_lo, rho_hi = window
    ax.set_xlim(gamma_lo, gamma_hi)
    ax.set_ylim(rho_lo, rho_hi)
    ax.set_xlabel("gamma")
    ax.set_ylabel("rho")
    return fig


def _codim2_labels(special: list[SpecialPoint]) -> list[tuple[str, SpecialPoint]]:
    """``BT1, BT2, GH1, GH2`` numbered by decreasing ``rho``, duplicates across curves merged."""
    labelled: list[tuple[str, SpecialPoint]] = []
    for kind in (SpecialKind.BT, SpecialKind.GH):
        unique: list[SpecialPoint] = []
        for sp in sorted((s for s in special if s.kind is kind), key=lambda s: -s.params.rho):
            if all(abs(sp.params.gamma - u.params.gamma) + abs(sp.params.rho - u.params.rho) > 1e-3 for u in unique):
                unique.append(sp)
        labelled += [(f"{kind.value}{k + 1}", sp) for k, sp in enumerate(unique)]
    return labelled


def portrait_figure(
    field: PortraitField,
    window: tuple[float, float, float, float],
    *,
    equilibria: list[EquilibriumPoint],
    cycles: list[Cycle] | None = None,
    manifolds: list[ManifoldBranch] | None = None,
    trajectories: list[np.ndarray] | None = None,
) -> Figure:
    fig = Figure(figsize=(6.5, 5.0))
    ax = fig.add_subplot()
    for tr in trajectories or []:
        ax.plot(tr[:, 1], tr[:, 2], color="0.6", lw=0.5)
    cells = field.cells()
    for tag, color in FATE_COLORS.items():
        pts = [(s, i) for _, _, s, i, fate in cells if fate.tag == tag]
        if pts:
            xy = np.asarray(pts)
            ax.scatter(xy[:, 0], xy[:, 1], s=9, color=color, label=tag, linewidths=0)
    for branch in manifolds or []:
        style = "-" if branch.kind == "stable" else ":"
        ax.plot(branch.points[:, 0], branch.points[:, 1], color="tab:purple", lw=1.0, ls=style)
    for cycle in cycles or []:
        ax.plot(cycle.mesh[:, 0], cycle.mesh[:, 1], color="black", lw=1.4, ls=CYCLE_STYLES[cycle.stability])
    for eq in equilibria:
        marker, face = EQUILIBRIUM_MARKERS[eq.stability]
        ax.plot([eq.state.S], [eq.state.I], marker=marker, mfc=face, mec="black", ms=7, ls="none")
        ax.annotate(eq.label.value, (eq.state.S, eq.state.I), textcoords="offset points", xytext=(5, 5), fontsize=8)

    s_lo, s_hi, i_lo, i_hi = window
    ax.set_xlim(s_lo, s_hi)
    ax.set_ylim(i_lo, i_hi)
    ax.set_xlabel("S")
    ax.set_ylabel("I")
    if cells:
        ax.legend(loc="upper right", fontsize=7, markerscale=1.5)
    return fig
