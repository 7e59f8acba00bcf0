from typing import Any


class EpibifError(Exception):
    def __init__(self, message: str = "Analysis failed.", detail: dict[str, Any] | None = None) -> None:
        self.message = message
        self.detail = detail or {}
        super().__init__(self.message)


class DomainError(EpibifError):
    def __init__(
        self, message: str = "Input outside the model's domain.", detail: dict[str, Any] | None = None
    ) -> None:
        super().__init__(message, detail)


class SingularMatrixError(EpibifError):
    def __init__(self, message: str = "Matrix is singular to working precision.", pivot: float | None = None) -> None:
        super().__init__(message, {"pivot": pivot} if pivot is not None else None)


class ConvergenceError(EpibifError):
    """Iterative solver gave up; ``detail`` carries what is needed to diagnose it.

    Typical payloads are the polynomial coefficients handed to the root finder,
    the bracket of a failed localization, or the last Newton iterate.
    """

    def __init__(self, message: str = "Iteration did not converge.", detail: dict[str, Any] | None = None) -> None:
        super().__init__(message, detail)


class StiffnessSuspectedError(EpibifError):
    def __init__(self, message: str = "Step size underflow; the problem may be stiff.", t: float | None = None) -> None:
        super().__init__(message, {"t": t} if t is not None else None)


class ContinuationError(EpibifError):
    def __init__(self, message: str = "Continuation could not start.", detail: dict[str, Any] | None = None) -> None:
        super().__init__(message, detail)
