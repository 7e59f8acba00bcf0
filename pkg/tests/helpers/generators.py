import numpy as np
from src.epibif.schemas.params import Params

SEED = 20201

# Box around the region of the (gamma, rho) plane with interesting dynamics.
GAMMA_BOX = (0.0, 0.45)
RHO_BOX = (0.0, 0.3)


def make_rng(seed: int = SEED) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_params(
    rng: np.random.Generator,
    count: int,
    gamma_box: tuple[float, float] = GAMMA_BOX,
    rho_box: tuple[float, float] = RHO_BOX,
) -> list[Params]:
    gammas = rng.uniform(*gamma_box, size=count)
    rhos = rng.uniform(*rho_box, size=count)
    return [Params(gamma=float(g), rho=float(r)) for g, r in zip(gammas, rhos, strict=True)]


def random_states(rng: np.random.Generator, count: int, window: tuple[float, float, float, float]) -> np.ndarray:
    s_lo, s_hi, i_lo, i_hi = window
    return np.column_stack([rng.uniform(s_lo, s_hi, size=count), rng.uniform(i_lo, i_hi, size=count)])
