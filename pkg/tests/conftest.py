from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest
from src.epibif.cli.presets import get_preset, preset_params
from src.epibif.schemas.config import RunConfig
from src.epibif.schemas.params import Params

from tests.helpers.generators import make_rng


@pytest.fixture
def default_params() -> Params:
    """
    Rates of the reference scenario with gamma = rho = 0.
    """
    return Params()


@pytest.fixture
def params_at() -> Callable[[float, float], Params]:
    """
    Factory for parameter sets that differ from the defaults in (gamma, rho).
    """

    def _make(gamma: float, rho: float) -> Params:
        return Params(gamma=gamma, rho=rho)

    return _make


@pytest.fixture
def preset() -> Callable[[str], Params]:
    """
    Parameters of a named scenario preset.
    """

    def _make(preset_id: str) -> Params:
        return preset_params(get_preset(preset_id))

    return _make


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng()


@pytest.fixture
def run_config(tmp_path: Path) -> Callable[..., RunConfig]:
    """
    Factory for a validated run configuration writing into a temporary directory.
    """

    def _make(**overrides: object) -> RunConfig:
        return RunConfig.model_validate({"out_dir": str(tmp_path), **overrides})

    return _make
