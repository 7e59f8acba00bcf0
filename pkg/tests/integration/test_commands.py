"""
Integration tests for the command-line runs and their output files.
"""

import json

import pytest
from src.epibif import main as cli


def _files(directory) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


class TestDiagramCommand:
    """
    Test the bifurcation diagram run.
    """

    @pytest.mark.integration
    @pytest.mark.slow
    @pytest.mark.cli
    def test_outputs_are_byte_identical_across_runs(self, tmp_path, capsys):
        first, second = tmp_path / "a", tmp_path / "b"
        assert cli.main(["diagram", "--out-dir", str(first)]) == cli.EXIT_OK
        assert cli.main(["diagram", "--out-dir", str(second)]) == cli.EXIT_OK
        capsys.readouterr()
        a, b = _files(first), _files(second)
        assert set(a) == {"fold-1.branch.csv", "hopf-2.branch.csv", "diagram.svg", "diagram.report.json"}
        assert a == b

    @pytest.mark.integration
    @pytest.mark.slow
    @pytest.mark.cli
    def test_report_lists_codim2_points(self, tmp_path, capsys):
        assert cli.main(["diagram", "--zoom", "GH1", "--out-dir", str(tmp_path)]) == cli.EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["svg"] == "diagram-GH1.svg"
        assert not report["failures"]
        kinds = {sp["kind"] for curve in report["curves"] for sp in curve["special"]}
        assert kinds == {"BT", "GH"}


class TestPortraitCommand:
    """
    Test the phase portrait run on a small grid.
    """

    @pytest.mark.integration
    @pytest.mark.cli
    def test_single_attractor_grid(self, tmp_path, capsys):
        args = ["portrait", "--preset", "P5", "--window", "100", "1000", "0", "10", "--grid", "3", "3"]
        args += ["--separatrix", "none", "--trajectory-stride", "0", "--no-cycles", "--out-dir", str(tmp_path)]
        assert cli.main(args) == cli.EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["fates"] == {"E0": 9}
        assert report["files"] == ["portrait-P5.csv", "portrait-P5.svg"]
        assert (tmp_path / "portrait-P5.report.json").exists()
        rows = (tmp_path / "portrait-P5.csv").read_text().strip().splitlines()
        assert len(rows) == 10


class TestSweepCommand:
    """
    Test the one-parameter sweep run.
    """

    @pytest.mark.integration
    @pytest.mark.slow
    @pytest.mark.cli
    def test_equilibrium_events_along_preset_family(self, tmp_path, capsys):
        assert cli.main(["sweep", "--preset", "P1", "--no-cycles", "--out-dir", str(tmp_path)]) == cli.EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["active_param"] == "rho"
        assert report["frozen_value"] == 0.392
        kinds = [e["kind"] for e in report["events"]]
        assert kinds.index("HB") < kinds.index("LP")
        values = [e["value"] for e in report["events"]]
        assert values == sorted(values, reverse=True)
        assert (tmp_path / "sweep-P1.report.json").exists()
        assert (tmp_path / "sweep-P1-1.branch.csv").exists()
