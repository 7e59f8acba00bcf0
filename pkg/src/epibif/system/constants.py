from fractions import Fraction

import numpy as np

# Fixed rates used throughout the analysis; gamma and rho vary.
DEFAULT_RATES: dict[str, float] = {"beta": 0.05, "lambda": 10.0, "mu": 0.01, "mu_prime": 0.1, "alpha": 0.2}

# R0 = 1 at the default rates; left edge of the diagram window.
GAMMA_0 = float(Fraction(4969, 31000))
# Forward/backward switch of the transcritical point at the default rates; bottom edge.
RHO_0 = float(Fraction(29791, 100_000_000))

DIAGRAM_WINDOW: tuple[float, float, float, float] = (GAMMA_0, 0.42, RHO_0, 0.27)

# Named magnifications around the codimension-two points (gamma_min, gamma_max, rho_min, rho_max).
ZOOM_WINDOWS: dict[str, tuple[float, float, float, float]] = {
    "BT1": (0.385, 0.415, 0.19, 0.25),
    "BT2": (0.1625, 0.1655, 0.0021, 0.0031),
    "GH1": (0.36, 0.385, 0.12, 0.15),
    "GH2": (0.1630, 0.1648, 0.0022, 0.0029),
}

# (S, I) scaling that makes both coordinates O(1) near the endemic states.
STATE_SCALE = np.array([1000.0, 40.0])

DEFAULT_PORTRAIT_WINDOW: tuple[float, float, float, float] = (0.0, 1000.0, 0.0, 40.0)
DEFAULT_BUDGET = 10_000.0
