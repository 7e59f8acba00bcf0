from enum import Enum
import os
from pathlib import Path

from pydantic import SecretStr
from pydantic_settings import BaseSettings, SettingsConfigDict

current_file_dir = os.path.dirname(os.path.realpath(__file__))
base_dir = Path(current_file_dir).resolve().parents[2]
# Prefer .env, then .env.local; pass None if not found to avoid warnings in production
env_candidates = [base_dir / ".env", base_dir / ".env.local"]
env_file = next((str(p) for p in env_candidates if p.exists()), None)


class _EnvSettings(BaseSettings):
    model_config = SettingsConfigDict(env_file=env_file, env_file_encoding="utf-8", extra="ignore")


class AppSettings(_EnvSettings):
    APP_NAME: str = "epibif"
    APP_DESCRIPTION: str | None = "Continuation and bifurcation analysis of an SIR-type COVID-19 model"
    APP_VERSION: str | None = None


class OutputSettings(_EnvSettings):
    EPIBIF_OUT_DIR: Path = Path("out")


class LoggingSettings(_EnvSettings):
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "json"
    LOG_FILE: Path | None = None
    LOG_FILE_MAX_BYTES: int = 10485760
    LOG_FILE_BACKUP_COUNT: int = 5
    LOKI_URL: str | None = None
    LOKI_TENANT_ID: str | None = None
    LOKI_USERNAME: str | None = None
    LOKI_PASSWORD: SecretStr | None = None


class NumericsSettings(_EnvSettings):
    TOL_HYPERBOLIC: float = 1e-8
    NEWTON_TOL: float = 1e-10
    NEWTON_MAX_ITER: int = 30
    PARALLEL_WORKERS: int = 1


class EnvironmentOption(Enum):
    LOCAL = "local"
    TESTING = "testing"
    PRODUCTION = "production"


class EnvironmentSettings(_EnvSettings):
    ENVIRONMENT: EnvironmentOption = EnvironmentOption.LOCAL


class Settings(
    AppSettings,
    OutputSettings,
    LoggingSettings,
    NumericsSettings,
    EnvironmentSettings,
):
    pass


settings = Settings()
