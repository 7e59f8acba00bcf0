# ruff: noqa
from .config_exceptions import ConfigError, UnknownPresetError
from .solver_exceptions import (
    ContinuationError,
    ConvergenceError,
    DomainError,
    EpibifError,
    SingularMatrixError,
    StiffnessSuspectedError,
)
