import argparse
from collections.abc import Callable, Sequence
import json
import logging
from pathlib import Path
import sys
from typing import Any

from pydantic import BaseModel, ValidationError

from .cli import commands
from .cli.serialization import dumps_json
from .core.config import settings
from .core.exceptions import ConfigError, EpibifError
from .core.logging_config import new_run_id, setup_logging
from .core.utils.files import jsonable

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--preset", dest="preset", help="scenario preset P1..P15")
    parser.add_argument("--out-dir", dest="out_dir", type=Path, help="output directory (default $EPIBIF_OUT_DIR)")
    parser.add_argument("--workers", dest="workers", type=int)
    parser.add_argument("--log-level", dest="_log_level", help="overrides LOG_LEVEL")
    for flag, dest in (
        ("--gamma", "params.gamma"),
        ("--rho", "params.rho"),
        ("--beta", "params.beta"),
        ("--lambda", "params.lambda"),
        ("--mu", "params.mu"),
        ("--mu-prime", "params.mu_prime"),
        ("--alpha", "params.alpha"),
    ):
        parser.add_argument(flag, dest=dest, type=float)


def _add_cycles(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--amplitude", dest="cycles.amplitude", type=float)
    parser.add_argument("--segments", dest="cycles.segments", type=int)
    parser.add_argument("--period-threshold", dest="cycles.period_threshold", type=float)


def _add_steps(parser: argparse.ArgumentParser, section: str) -> None:
    parser.add_argument("--h0", dest=f"{section}.h0", type=float)
    parser.add_argument("--hmax", dest=f"{section}.hmax", type=float)
    parser.add_argument("--max-points", dest=f"{section}.max_points", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epibif", description=settings.APP_DESCRIPTION)
    sub = parser.add_subparsers(dest="_command", required=True)

    eq = sub.add_parser("equilibria", help="equilibria, eigenvalues and R0")
    _add_common(eq)

    diagram = sub.add_parser("diagram", help="fold/Hopf curves with BT and GH points")
    _add_common(diagram)
    _add_steps(diagram, "diagram")
    _add_cycles(diagram)
    diagram.add_argument("--window", dest="diagram.window", type=float, nargs=4, metavar=("G0", "G1", "R0", "R1"))
    diagram.add_argument("--zoom", dest="diagram.zoom", choices=["BT1", "BT2", "GH1", "GH2"])
    diagram.add_argument("--seed-rho", dest="diagram.seed_rho", type=float)
    diagram.add_argument("--cycle-samples", dest="diagram.cycle_samples", action="store_true", default=None)

    portrait = sub.add_parser("portrait", help="phase portrait with fates, cycles and separatrices")
    _add_common(portrait)
    _add_cycles(portrait)
    portrait.add_argument("--window", dest="portrait.window", type=float, nargs=4, metavar=("S0", "S1", "I0", "I1"))
    portrait.add_argument("--grid", dest="portrait.grid", type=int, nargs=2, metavar=("N", "M"))
    portrait.add_argument("--budget", dest="portrait.budget", type=float)
    portrait.add_argument("--separatrix", dest="portrait.separatrix", choices=["stable", "unstable", "both", "none"])
    portrait.add_argument("--trajectory-stride", dest="portrait.trajectory_stride", type=int)
    portrait.add_argument("--no-cycles", dest="portrait.cycles", action="store_false", default=None)

    sweep = sub.add_parser("sweep", help="ordered bifurcation events along one parameter")
    _add_common(sweep)
    _add_steps(sweep, "continuation")
    _add_cycles(sweep)
    sweep.add_argument("--active-param", dest="sweep.active_param", choices=["gamma", "rho"])
    sweep.add_argument("--range", dest="sweep.range", type=float, nargs=2, metavar=("LO", "HI"))
    sweep.add_argument("--direction", dest="sweep.direction", choices=["increasing", "decreasing"])
    sweep.add_argument("--no-cycles", dest="sweep.cycles", action="store_false", default=None)

    presets = sub.add_parser("presets", help="scenario presets")
    presets_sub = presets.add_subparsers(dest="_presets_command", required=True)
    presets_sub.add_parser("list", help="print the fifteen presets")
    check = presets_sub.add_parser("check", help="classify presets against their expected summaries")
    _add_common(check)
    _add_cycles(check)
    check.add_argument("ids", nargs="*", help="preset ids (default: all)")

    sub.add_parser("schema", help="print the run configuration JSON schema")
    return parser


def overrides_from(args: argparse.Namespace) -> dict[str, Any]:
    """Nested config overrides from the flags that were given."""
    nested: dict[str, Any] = {}
    for dest, value in vars(args).items():
        if value is None or dest.startswith("_") or dest in ("config", "ids"):
            continue
        node = nested
        *parents, leaf = dest.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return nested


def _error_line(exc: Exception) -> str:
    if isinstance(exc, ValidationError):
        detail = exc.errors(include_url=False)
        payload = {"error": "ConfigError", "message": "Invalid run configuration.", "detail": detail}
    elif isinstance(exc, EpibifError):
        payload = {"error": type(exc).__name__, "message": exc.message, "detail": exc.detail}
    else:
        payload = {"error": type(exc).__name__, "message": str(exc), "detail": {}}
    return json.dumps(jsonable(payload), sort_keys=True, ensure_ascii=False, default=str)


def _dispatch(args: argparse.Namespace) -> BaseModel | dict[str, Any] | list[Any]:
    command = args._command
    if command == "schema":
        return commands.cmd_schema()
    if command == "presets" and args._presets_command == "list":
        return commands.cmd_presets_list()

    cfg = commands.load_config(getattr(args, "config", None), overrides_from(args))
    if command == "presets":
        return commands.cmd_presets_check(cfg, args.ids)
    handlers: dict[str, Callable[[Any], BaseModel]] = {
        "equilibria": commands.cmd_equilibria,
        "diagram": commands.cmd_diagram,
        "portrait": commands.cmd_portrait,
        "sweep": commands.cmd_sweep,
    }
    return handlers[command](cfg)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(settings, level=getattr(args, "_log_level", None))
    run_id = new_run_id()
    logger.info("epibif %s started (run %s)", args._command, run_id)
    try:
        result = _dispatch(args)
    except (ConfigError, ValidationError) as exc:
        sys.stderr.write(_error_line(exc) + "\n")
        return EXIT_CONFIG
    except EpibifError as exc:
        logger.error("Run failed: %s", exc.message)
        sys.stderr.write(_error_line(exc) + "\n")
        return EXIT_SOLVER
    sys.stdout.write(dumps_json(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
