"""
Unit tests for run configuration, settings, logging and file helpers.
"""

import json
import logging

import pytest
from pydantic import ValidationError
from src.epibif.cli.commands import load_config, out_dir, resolved_params
from src.epibif.core.config import Settings
from src.epibif.core.exceptions import ConfigError
from src.epibif.core.logging_config import RUN_ID_CTX, JsonFormatter, RunIdFilter, new_run_id
from src.epibif.core.utils.files import atomic_write_text, jsonable, round_sig
from src.epibif.core.utils.parallel import map_ordered
from src.epibif.schemas.config import RunConfig, run_config_schema
from src.epibif.schemas.params import ActiveParam


def _square(x: int) -> int:
    return x * x


class TestRunConfig:
    """
    Test validation of the run configuration.
    """

    @pytest.mark.unit
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.params.gamma == 0.0
        assert cfg.sweep.active_param is ActiveParam.RHO
        assert cfg.sweep.range == (0.170, 0.192)
        assert cfg.portrait.grid == (20, 20)
        assert cfg.cycles.period_threshold == 1000.0

    @pytest.mark.unit
    def test_unknown_keys_are_rejected(self):
        with pytest.raises(ValidationError):
            RunConfig.model_validate({"portrait": {"gird": [10, 10]}})

    @pytest.mark.unit
    def test_bad_preset_id(self):
        with pytest.raises(ValidationError):
            RunConfig(preset="P16")

    @pytest.mark.unit
    def test_window_must_be_ordered(self):
        with pytest.raises(ValidationError):
            RunConfig.model_validate({"diagram": {"window": [0.4, 0.2, 0.0, 0.3]}})

    @pytest.mark.unit
    def test_sweep_range_must_increase(self):
        with pytest.raises(ValidationError):
            RunConfig.model_validate({"sweep": {"range": [0.19, 0.17]}})

    @pytest.mark.unit
    def test_step_sizes_ordered(self):
        with pytest.raises(ValidationError):
            RunConfig.model_validate({"continuation": {"h0": 0.1, "hmax": 0.01}})

    @pytest.mark.unit
    def test_grid_limit(self):
        with pytest.raises(ValidationError):
            RunConfig.model_validate({"portrait": {"grid": [201, 10]}})

    @pytest.mark.unit
    def test_schema_is_published(self):
        schema = run_config_schema()
        assert schema["title"] == "epibif run configuration"
        assert "lambda" in json.dumps(schema)


class TestLoadConfig:
    """
    Test merging of config files and flag overrides.
    """

    @pytest.mark.unit
    def test_overrides_win_over_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"params": {"gamma": 0.3, "rho": 0.1}, "portrait": {"budget": 500}}))
        cfg = load_config(path, {"params": {"rho": 0.2}})
        assert cfg.params.gamma == 0.3
        assert cfg.params.rho == 0.2
        assert cfg.portrait.budget == 500

    @pytest.mark.unit
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as exc_info:
            load_config(tmp_path / "absent.json")
        assert "path" in exc_info.value.detail

    @pytest.mark.unit
    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    @pytest.mark.unit
    def test_non_object_json(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config(path)

    @pytest.mark.unit
    def test_lambda_on_the_wire(self):
        cfg = load_config(None, {"params": {"lambda": 12.0}})
        assert cfg.params.lambda_ == 12.0

    @pytest.mark.unit
    def test_preset_overrides_gamma_and_rho(self, run_config):
        cfg = run_config(preset="P1", params={"gamma": 0.1, "rho": 0.0, "beta": 0.06})
        p = resolved_params(cfg)
        assert (p.gamma, p.rho) == (0.392, 0.19)
        assert p.beta == 0.06

    @pytest.mark.unit
    def test_out_dir_from_config(self, run_config, tmp_path):
        assert out_dir(run_config()) == tmp_path


class TestSettings:
    """
    Test environment-driven settings.
    """

    @pytest.mark.unit
    def test_environment_overrides(self, monkeypatch, tmp_path):
        monkeypatch.setenv("EPIBIF_OUT_DIR", str(tmp_path))
        monkeypatch.setenv("LOG_FORMAT", "plain")
        monkeypatch.setenv("NEWTON_TOL", "1e-9")
        s = Settings()
        assert s.EPIBIF_OUT_DIR == tmp_path
        assert s.LOG_FORMAT == "plain"
        assert s.NEWTON_TOL == 1e-9


class TestLogging:
    """
    Test the JSON log formatter and run-id propagation.
    """

    @pytest.mark.unit
    def test_json_record_carries_run_id(self):
        run_id = new_run_id()
        record = logging.LogRecord("epibif.test", logging.INFO, __file__, 10, "hello %s", ("world",), None)
        RunIdFilter().filter(record)
        payload = json.loads(JsonFormatter().format(record))
        assert payload["msg"] == "hello world"
        assert payload["level"] == "INFO"
        assert payload["run_id"] == run_id
        assert RUN_ID_CTX.get() == run_id
        assert len(run_id) == 12


class TestFiles:
    """
    Test number formatting and atomic writes.
    """

    @pytest.mark.unit
    def test_jsonable_rounds_and_converts(self):
        data = jsonable({"x": 1 / 3, "z": complex(1.0, -2.0), "bad": float("nan"), "n": 3, "t": (0.1, True)})
        assert data == {"x": 0.333333333, "z": {"re": 1.0, "im": -2.0}, "bad": None, "n": 3, "t": [0.1, True]}

    @pytest.mark.unit
    def test_round_sig(self):
        assert round_sig(123456789012.0) == 123456789000.0

    @pytest.mark.unit
    def test_atomic_write_creates_parents(self, tmp_path):
        path = atomic_write_text(tmp_path / "a" / "b.txt", "x\ny\n")
        assert path.read_bytes() == b"x\ny\n"
        assert [p.name for p in path.parent.iterdir()] == ["b.txt"]


class TestParallel:
    """
    Test ordered mapping.
    """

    @pytest.mark.unit
    def test_serial_map_keeps_order(self):
        assert map_ordered(_square, [3, 1, 2]) == [9, 1, 4]

    @pytest.mark.unit
    @pytest.mark.slow
    def test_process_pool_keeps_order(self):
        assert map_ordered(_square, list(range(20)), workers=2) == [k * k for k in range(20)]
