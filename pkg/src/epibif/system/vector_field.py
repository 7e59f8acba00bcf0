"""The SIR-type vector field, its derivatives and the reproduction number.

The ``(S, I)`` subsystem is closed (``R`` never feeds back), so almost every
analysis works on the planar reduction. Besides the public operations this
module exposes fast closures (:func:`planar_field`, :func:`full_field`) for
the integrator and the parameter/second derivatives needed by the
two-parameter defining systems.
"""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core.exceptions import DomainError
from ..models.state import StateVec
from ..schemas.params import ActiveParam, Params

FloatArray = NDArray[np.float64]


def _as_state(state: StateVec | ArrayLike, dim: int) -> FloatArray:
    x = state.as_array() if isinstance(state, StateVec) else np.asarray(state, dtype=float).ravel()
    if x.size < dim:
        raise DomainError(f"Expected a state with at least {dim} components.", {"size": int(x.size)})
    if not np.all(np.isfinite(x)):
        raise DomainError("State components must be finite.", {"state": x.tolist()})
    return x


def _fluxes(S: float, I: float, p: Params) -> tuple[float, float]:
    incidence = p.beta * S * I / (1.0 + p.gamma * S)
    treatment = p.alpha * I / (1.0 + p.rho * I)
    return incidence, treatment


def rhs_full(state: StateVec | ArrayLike, p: Params) -> FloatArray:
    """``(dS/dt, dI/dt, dR/dt)`` of the three-compartment model."""
    S, I, R = _as_state(state, 3)[:3]
    incidence, treatment = _fluxes(S, I, p)
    return np.array(
        [
            p.lambda_ - p.mu * S - incidence,
            -(p.mu + p.mu_prime) * I + incidence - treatment,
            -p.mu * R + treatment,
        ]
    )


def rhs_reduced(state: StateVec | ArrayLike, p: Params) -> FloatArray:
    S, I = _as_state(state, 2)[:2]
    incidence, treatment = _fluxes(S, I, p)
    return np.array([p.lambda_ - p.mu * S - incidence, -(p.mu + p.mu_prime) * I + incidence - treatment])


def jacobian_reduced(state: StateVec | ArrayLike, p: Params) -> FloatArray:
    S, I = _as_state(state, 2)[:2]
    u = 1.0 + p.gamma * S
    w = 1.0 + p.rho * I
    return np.array(
        [
            [-p.mu - p.beta * I / u**2, -p.beta * S / u],
            [p.beta * I / u**2, -(p.mu + p.mu_prime) + p.beta * S / u - p.alpha / w**2],
        ]
    )


def jacobian_full(state: StateVec | ArrayLike, p: Params) -> FloatArray:
    x = _as_state(state, 2)
    S, I = x[0], x[1]
    jac = np.zeros((3, 3))
    jac[:2, :2] = jacobian_reduced((S, I), p)
    jac[2, 1] = p.alpha / (1.0 + p.rho * I) ** 2
    jac[2, 2] = -p.mu
    return jac


def r0(p: Params) -> float:
    """Basic reproduction number ``beta*lambda / ((mu + gamma*lambda)(mu + mu' + alpha))``."""
    return p.beta * p.lambda_ / ((p.mu + p.gamma * p.lambda_) * (p.mu + p.mu_prime + p.alpha))


def threshold_gamma(p: Params) -> float:
    """Cautiousness level at which ``r0`` equals one (the other rates held fixed)."""
    return (p.beta * p.lambda_ / (p.mu + p.mu_prime + p.alpha) - p.mu) / p.lambda_


def recovered_at_equilibrium(I: float, p: Params) -> float:
    return p.alpha * I / (p.mu * (1.0 + p.rho * I))


def planar_field(p: Params) -> Callable[[float, FloatArray], FloatArray]:
    """``f(t, x)`` for the planar system with the parameters bound as floats."""
    beta, lam, mu, mu_prime, alpha, gamma, rho = p.as_tuple()
    m = mu + mu_prime

    def f(_t: float, x: FloatArray) -> FloatArray:
        S, I = x[0], x[1]
        incidence = beta * S * I / (1.0 + gamma * S)
        return np.array([lam - mu * S - incidence, -m * I + incidence - alpha * I / (1.0 + rho * I)])

    return f


def full_field(p: Params) -> Callable[[float, FloatArray], FloatArray]:
    beta, lam, mu, mu_prime, alpha, gamma, rho = p.as_tuple()
    m = mu + mu_prime

    def f(_t: float, x: FloatArray) -> FloatArray:
        S, I, R = x[0], x[1], x[2]
        incidence = beta * S * I / (1.0 + gamma * S)
        treatment = alpha * I / (1.0 + rho * I)
        return np.array([lam - mu * S - incidence, -m * I + incidence - treatment, -mu * R + treatment])

    return f


def parameter_derivative(state: StateVec | ArrayLike, p: Params, name: ActiveParam) -> FloatArray:
    """Partial derivative of ``rhs_reduced`` with respect to gamma or rho."""
    S, I = _as_state(state, 2)[:2]
    if name is ActiveParam.GAMMA:
        d = p.beta * S * S * I / (1.0 + p.gamma * S) ** 2
        return np.array([d, -d])
    return np.array([0.0, p.alpha * I * I / (1.0 + p.rho * I) ** 2])


@dataclass(frozen=True)
class JacobianSensitivity:
    """Derivatives of the planar Jacobian along ``S``, ``I``, ``gamma`` and ``rho``."""

    jac: FloatArray
    dS: FloatArray
    dI: FloatArray
    dgamma: FloatArray
    drho: FloatArray

    def _det_derivative(self, d: FloatArray) -> float:
        J = self.jac
        return float(d[0, 0] * J[1, 1] + J[0, 0] * d[1, 1] - d[0, 1] * J[1, 0] - J[0, 1] * d[1, 0])

    def det_gradient(self) -> FloatArray:
        """Gradient of ``det J`` in ``(S, I, gamma, rho)`` by Jacobi's formula."""
        return np.array([self._det_derivative(d) for d in (self.dS, self.dI, self.dgamma, self.drho)])

    def trace_gradient(self) -> FloatArray:
        return np.array([float(np.trace(d)) for d in (self.dS, self.dI, self.dgamma, self.drho)])


def jacobian_sensitivity(state: StateVec | ArrayLike, p: Params) -> JacobianSensitivity:
    S, I = _as_state(state, 2)[:2]
    beta, alpha, gamma, rho = p.beta, p.alpha, p.gamma, p.rho
    u = 1.0 + gamma * S
    w = 1.0 + rho * I
    a = 2.0 * beta * I * gamma / u**3
    dS = np.array([[a, -beta / u**2], [-a, beta / u**2]])
    dI = np.array([[-beta / u**2, 0.0], [beta / u**2, 2.0 * alpha * rho / w**3]])
    b = 2.0 * beta * I * S / u**3
    c = beta * S * S / u**2
    dgamma = np.array([[b, c], [-b, -c]])
    drho = np.array([[0.0, 0.0], [0.0, 2.0 * alpha * I / w**3]])
    return JacobianSensitivity(jacobian_reduced((S, I), p), dS, dI, dgamma, drho)
