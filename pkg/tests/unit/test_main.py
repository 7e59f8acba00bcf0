"""
Unit tests for the command-line entry point.
"""

import json

import pytest
from src.epibif import main as cli
from src.epibif.core.exceptions import ConvergenceError


class TestOverrides:
    """
    Test translation of flags into nested config overrides.
    """

    @pytest.mark.unit
    def test_dotted_destinations_are_nested(self):
        args = cli.build_parser().parse_args(
            ["portrait", "--preset", "P7", "--gamma", "0.2", "--grid", "4", "5", "--no-cycles"]
        )
        assert cli.overrides_from(args) == {
            "preset": "P7",
            "params": {"gamma": 0.2},
            "portrait": {"grid": [4, 5], "cycles": False},
        }

    @pytest.mark.unit
    def test_private_and_positional_values_are_skipped(self):
        args = cli.build_parser().parse_args(["presets", "check", "P1", "P2", "--log-level", "DEBUG"])
        assert args.ids == ["P1", "P2"]
        assert cli.overrides_from(args) == {}

    @pytest.mark.unit
    def test_unknown_subcommand_exits(self):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["bogus"])


class TestMain:
    """
    Test exit codes and output streams.
    """

    @pytest.mark.unit
    @pytest.mark.cli
    def test_equilibria_report(self, tmp_path, capsys):
        code = cli.main(["equilibria", "--preset", "P1", "--out-dir", str(tmp_path)])
        assert code == cli.EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["preset"] == "P1"
        assert report["backward"] is True
        assert [e["label"] for e in report["endemic"]] == ["E2", "E1"]
        assert report["r0"] == pytest.approx(0.4104, abs=1e-4)
        assert (tmp_path / "equilibria-P1.report.json").exists()

    @pytest.mark.unit
    @pytest.mark.cli
    def test_presets_list(self, capsys):
        assert cli.main(["presets", "list"]) == cli.EXIT_OK
        presets = json.loads(capsys.readouterr().out)
        assert [p["id"] for p in presets] == [f"P{k}" for k in range(1, 16)]

    @pytest.mark.unit
    @pytest.mark.cli
    def test_schema(self, capsys):
        assert cli.main(["schema"]) == cli.EXIT_OK
        assert json.loads(capsys.readouterr().out)["title"] == "epibif run configuration"

    @pytest.mark.unit
    @pytest.mark.cli
    def test_invalid_value_is_a_config_error(self, tmp_path, capsys):
        code = cli.main(["equilibria", "--preset", "P16", "--out-dir", str(tmp_path)])
        assert code == cli.EXIT_CONFIG
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "ConfigError"
        assert err["detail"]

    @pytest.mark.unit
    @pytest.mark.cli
    def test_missing_config_file(self, tmp_path, capsys):
        code = cli.main(["equilibria", "--config", str(tmp_path / "none.json")])
        assert code == cli.EXIT_CONFIG
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["detail"]["path"].endswith("none.json")

    @pytest.mark.unit
    @pytest.mark.cli
    def test_solver_failure_exit_code(self, tmp_path, capsys, mocker):
        failure = ConvergenceError("Cycle corrector did not converge.", {"residual": 1.0})
        handler = mocker.patch.object(cli.commands, "cmd_equilibria", side_effect=failure)
        code = cli.main(["equilibria", "--out-dir", str(tmp_path)])
        handler.assert_called_once()
        assert code == cli.EXIT_SOLVER
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "ConvergenceError"
        assert err["message"] == "Cycle corrector did not converge."
        assert err["detail"] == {"residual": 1.0}
