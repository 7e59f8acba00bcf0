from typing import Any

from .solver_exceptions import EpibifError


class ConfigError(EpibifError):
    def __init__(self, message: str = "Invalid run configuration.", detail: dict[str, Any] | None = None) -> None:
        super().__init__(message, detail)


class UnknownPresetError(ConfigError):
    def __init__(self, preset_id: str) -> None:
        super().__init__(f"Unknown scenario preset: {preset_id}", {"preset": preset_id})
