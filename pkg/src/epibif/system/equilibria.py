"""Disease-free and endemic equilibria.

Endemic states solve ``dI/dt = 0`` for ``S`` in terms of ``I``::

    S = N / (beta*D - gamma*N),  D = 1 + rho*I,  N = (mu + mu')*D + alpha

and substituting into ``dS/dt = 0`` (cleared of denominators) leaves a cubic in
``I``. Its real roots are computed from the companion matrix, filtered to the
positive quadrant and polished by a planar Newton solve.
"""

import logging

import numpy as np
from numpy.polynomial import Polynomial

from ..core.config import settings
from ..core.exceptions import DomainError
from ..core.numerics import eigvals_small, newton, poly_real_roots
from ..models.state import EquilibriumLabel, EquilibriumPoint, Stability, StateVec
from ..schemas.params import Params
from .vector_field import (
    jacobian_full,
    jacobian_reduced,
    r0,
    recovered_at_equilibrium,
    rhs_reduced,
)

logger = logging.getLogger(__name__)

_DEDUP_TOL = 1e-8
_ENDEMIC_LABELS = (EquilibriumLabel.E1, EquilibriumLabel.E2, EquilibriumLabel.E3)


def classify_eigenvalues(eigenvalues: tuple[complex, ...] | list[complex], tol: float | None = None) -> Stability:
    tol = settings.TOL_HYPERBOLIC if tol is None else tol
    re = [z.real for z in eigenvalues]
    if any(abs(r) <= tol for r in re):
        return Stability.NON_HYPERBOLIC
    spiral = any(z.imag != 0.0 for z in eigenvalues)
    if all(r < 0 for r in re):
        return Stability.STABLE_SPIRAL if spiral else Stability.STABLE_NODE
    if all(r > 0 for r in re):
        return Stability.UNSTABLE_SPIRAL if spiral else Stability.UNSTABLE_NODE
    return Stability.SADDLE


def classify_equilibrium(eq: EquilibriumPoint, tol: float | None = None) -> Stability:
    if not eq.eigenvalues:
        raise DomainError("Equilibrium has no eigenvalues to classify.")
    return classify_eigenvalues(eq.eigenvalues, tol)


def equilibrium_at(state: np.ndarray, p: Params, label: EquilibriumLabel, full: bool = False) -> EquilibriumPoint:
    """Wrap a planar root into an :class:`EquilibriumPoint` with its spectrum."""
    S, I = float(state[0]), float(state[1])
    residual = float(np.max(np.abs(rhs_reduced((S, I), p))))
    if full:
        eigs = tuple(eigvals_small(jacobian_full((S, I), p)))
        point = StateVec(S, I, recovered_at_equilibrium(I, p))
    else:
        eigs = tuple(eigvals_small(jacobian_reduced((S, I), p)))
        point = StateVec(S, I)
    return EquilibriumPoint(
        state=point,
        params=p,
        eigenvalues=eigs,
        stability=classify_eigenvalues(eigs),
        label=label,
        residual=residual,
    )


def disease_free_equilibrium(p: Params, full: bool = False) -> EquilibriumPoint:
    eq = equilibrium_at(np.array([p.lambda_ / p.mu, 0.0]), p, EquilibriumLabel.E0, full=full)
    return EquilibriumPoint(
        state=eq.state,
        params=p,
        eigenvalues=eq.eigenvalues,
        stability=eq.stability,
        label=eq.label,
        residual=eq.residual,
        extra={"r0": r0(p)},
    )


def endemic_polynomial(p: Params) -> Polynomial:
    """Cubic in ``I`` whose positive roots (with ``S > 0``) are the endemic states."""
    m = p.mu + p.mu_prime
    D = Polynomial([1.0, p.rho])
    N = m * D + p.alpha
    denom = p.beta * D - p.gamma * N
    I = Polynomial([0.0, 1.0])
    return p.lambda_ * D * denom - p.mu * N * D - I * N * denom


def _susceptible_for(I: float, p: Params) -> float:
    D = 1.0 + p.rho * I
    N = (p.mu + p.mu_prime) * D + p.alpha
    denom = p.beta * D - p.gamma * N
    return N / denom if denom > 0.0 else -1.0


def endemic_equilibria(p: Params, full: bool = False) -> list[EquilibriumPoint]:
    """All endemic equilibria, sorted by ``I`` ascending.

    Labels count down from the largest infected level: the highest-``I`` state
    is ``E1``, the next ``E2`` and so on.

    Raises
    ------
    ConvergenceError
        If the companion-matrix solve itself fails; the payload carries the
        polynomial coefficients.
    """
    poly = endemic_polynomial(p)
    coeffs = poly.coef[::-1]
    candidates = poly_real_roots(coeffs)

    def F(x: np.ndarray) -> np.ndarray:
        return rhs_reduced(x, p)

    def J(x: np.ndarray) -> np.ndarray:
        return jacobian_reduced(x, p)

    roots: list[np.ndarray] = []
    for I in candidates:
        if I <= 0.0:
            continue
        S = _susceptible_for(I, p)
        if S <= 0.0:
            continue
        report = newton(F, J, np.array([S, I]), tol=settings.NEWTON_TOL, max_iter=settings.NEWTON_MAX_ITER)
        x = report.root
        if not report.converged or x[0] <= 0.0 or x[1] <= 0.0:
            logger.warning(
                "Dropped endemic candidate I=%.6g at gamma=%.6g rho=%.6g (residual %.3g)",
                I,
                p.gamma,
                p.rho,
                report.residual_norm,
            )
            continue
        if any(np.max(np.abs(x - y) / (1.0 + np.abs(y))) <= _DEDUP_TOL for y in roots):
            continue
        roots.append(x)

    roots.sort(key=lambda x: x[1])
    labels = _ENDEMIC_LABELS[: len(roots)][::-1]
    return [equilibrium_at(x, p, label, full=full) for x, label in zip(roots, labels, strict=True)]


def all_equilibria(p: Params, full: bool = False) -> list[EquilibriumPoint]:
    return [disease_free_equilibrium(p, full=full), *endemic_equilibria(p, full=full)]


def backward_threshold_rho(p: Params) -> float:
    """Bed-occupancy rate above which the transcritical point at ``r0 = 1`` is backward.

    The endemic branch leaves ``I = 0`` with slope ``dI/dgamma`` whose sign is
    that of the linear coefficient of :func:`endemic_polynomial` at the
    threshold; that coefficient vanishes at ``mu*M**3 / (lambda**2*beta*alpha)``
    with ``M = mu + mu' + alpha``.
    """
    M = p.mu + p.mu_prime + p.alpha
    return p.mu * M**3 / (p.lambda_**2 * p.beta * p.alpha)


def is_backward(p: Params) -> bool:
    """Whether endemic equilibria bend into ``r0 < 1`` at the transcritical point."""
    return p.rho > backward_threshold_rho(p)
