from enum import Enum
from typing import Annotated, Any

from pydantic import BaseModel, ConfigDict, Field


class ActiveParam(str, Enum):
    GAMMA = "gamma"
    RHO = "rho"

    @property
    def other(self) -> "ActiveParam":
        return ActiveParam.RHO if self is ActiveParam.GAMMA else ActiveParam.GAMMA


class Params(BaseModel):
    """The seven model parameters.

    ``lambda`` is a keyword, so the field is ``lambda_`` in Python and ``lambda``
    on the wire. Instances are frozen; use :meth:`replace` to move in parameter
    space.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    beta: Annotated[float, Field(gt=0, allow_inf_nan=False, default=0.05, description="transmission rate")]
    lambda_: Annotated[
        float, Field(gt=0, allow_inf_nan=False, default=10.0, alias="lambda", description="recruitment rate")
    ]
    mu: Annotated[float, Field(gt=0, allow_inf_nan=False, default=0.01, description="natural death rate")]
    mu_prime: Annotated[float, Field(gt=0, allow_inf_nan=False, default=0.1, description="disease death rate")]
    alpha: Annotated[float, Field(gt=0, allow_inf_nan=False, default=0.2, description="treatment rate")]
    gamma: Annotated[float, Field(ge=0, le=1, default=0.0, examples=[0.392], description="cautiousness level")]
    rho: Annotated[float, Field(ge=0, le=1, default=0.0, examples=[0.19], description="bed-occupancy rate")]

    def replace(self, **updates: float) -> "Params":
        """Copy with some fields changed.

        Skips validation so that Newton iterates may step briefly outside the
        unit square; callers that need a checked value should go through
        ``Params.model_validate``.
        """
        if "lambda" in updates:
            updates["lambda_"] = updates.pop("lambda")
        return self.model_copy(update=updates)

    def value(self, name: ActiveParam) -> float:
        return float(getattr(self, name.value))

    def with_value(self, name: ActiveParam, value: float) -> "Params":
        return self.replace(**{name.value: float(value)})

    def as_tuple(self) -> tuple[float, float, float, float, float, float, float]:
        return (self.beta, self.lambda_, self.mu, self.mu_prime, self.alpha, self.gamma, self.rho)

    def to_wire(self) -> dict[str, Any]:
        return self.model_dump(by_alias=True)
