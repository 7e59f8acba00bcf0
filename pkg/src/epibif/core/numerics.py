"""Small dense linear algebra, damped Newton and polynomial roots.

Every solver in the package funnels through these helpers, so they are kept
free of model knowledge. Matrices are plain ``numpy`` arrays; the largest
systems built here are the bordered continuation systems and the
multiple-shooting corrector.
"""

from collections.abc import Callable
from dataclasses import dataclass
import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import lu_factor, lu_solve

from .exceptions import ConvergenceError, DomainError, SingularMatrixError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

PIVOT_TOL = 1e-14
MAX_DENSE_DIM = 16
MAX_HALVINGS = 8


@dataclass(frozen=True)
class NewtonReport:
    root: FloatArray
    residual_norm: float
    iterations: int
    converged: bool


def as_matrix(A: ArrayLike) -> FloatArray:
    """Validate a square-or-rectangular real matrix with finite entries."""
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise DomainError("Expected a non-empty 2-D matrix.", {"shape": list(M.shape)})
    if not np.all(np.isfinite(M)):
        raise DomainError("Matrix has non-finite entries.")
    return M


def solve_linear(A: ArrayLike, b: ArrayLike) -> FloatArray:
    """Solve ``A x = b`` by partially pivoted LU.

    Raises
    ------
    SingularMatrixError
        If a pivot of the factorisation falls below ``PIVOT_TOL`` relative to
        the matrix scale.
    """
    M = as_matrix(A)
    rhs = np.asarray(b, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n) or rhs.shape[0] != n:
        raise DomainError("Linear system dimensions disagree.", {"A": list(M.shape), "b": list(rhs.shape)})
    if n > MAX_DENSE_DIM:
        raise DomainError(f"Dense solver is limited to n <= {MAX_DENSE_DIM}.", {"n": n})

    scale = max(1.0, float(np.max(np.abs(M))))
    lu, piv = lu_factor(M, check_finite=False)
    pivots = np.abs(np.diag(lu))
    smallest = float(pivots.min())
    if smallest < PIVOT_TOL * scale:
        raise SingularMatrixError(pivot=smallest)
    return np.asarray(lu_solve((lu, piv), rhs, check_finite=False), dtype=float)


def _sort_complex(values: list[complex]) -> list[complex]:
    return sorted(values, key=lambda z: (round(z.real, 14), round(z.imag, 14)))


def eigvals_small(A: ArrayLike) -> list[complex]:
    """Eigenvalues of a 2x2 or 3x3 real matrix from its characteristic polynomial."""
    M = as_matrix(A)
    n = M.shape[0]
    if M.shape != (n, n) or n not in (2, 3):
        raise DomainError("eigvals_small handles 2x2 and 3x3 matrices only.", {"shape": list(M.shape)})

    if n == 2:
        tr = M[0, 0] + M[1, 1]
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        disc = tr * tr - 4.0 * det
        if disc >= 0.0:
            root = np.sqrt(disc)
            # cancellation-free pair: r1 r2 = det
            r1 = 0.5 * (tr + np.copysign(root, tr)) if tr != 0.0 else 0.5 * root
            r2 = det / r1 if r1 != 0.0 else 0.5 * (tr - root)
            return _sort_complex([complex(r1), complex(r2)])
        half = 0.5 * np.sqrt(-disc)
        return _sort_complex([complex(0.5 * tr, half), complex(0.5 * tr, -half)])

    tr = float(np.trace(M))
    minors = (
        M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
        + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
    )
    det = float(np.linalg.det(M))
    coeffs = np.array([1.0, -tr, minors, -det])
    roots = np.roots(coeffs)
    # one Newton polish per root on the characteristic polynomial
    dcoeffs = np.polyder(coeffs)
    polished: list[complex] = []
    scale = 1.0 + float(np.max(np.abs(M)))
    for r in roots:
        d = np.polyval(dcoeffs, r)
        if abs(d) > 1e-14 * scale * scale:
            r = r - np.polyval(coeffs, r) / d
        if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real)):
            r = complex(r.real, 0.0)
        polished.append(complex(r))
    return _sort_complex(polished)


def newton(
    F: Callable[[FloatArray], ArrayLike],
    J: Callable[[FloatArray], ArrayLike],
    x0: ArrayLike,
    tol: float = 1e-10,
    max_iter: int = 30,
    max_halvings: int = MAX_HALVINGS,
) -> NewtonReport:
    """Damped Newton iteration with a step-halving line search of at most ``max_halvings`` cuts.

    Failure (non-finite residuals, singular Jacobians, exhausted iterations)
    comes back as ``converged=False``; this function does not raise for
    numerical trouble.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()

    def residual(z: FloatArray) -> FloatArray | None:
        try:
            r = np.atleast_1d(np.asarray(F(z), dtype=float))
        except (ArithmeticError, ValueError, DomainError):
            return None
        return r if np.all(np.isfinite(r)) else None

    r = residual(x)
    if r is None:
        return NewtonReport(x, float("inf"), 0, False)
    norm = float(np.max(np.abs(r)))

    for it in range(1, max_iter + 1):
        if norm <= tol:
            return NewtonReport(x, norm, it - 1, True)
        try:
            step = solve_linear(np.atleast_2d(np.asarray(J(x), dtype=float)), -r)
        except (SingularMatrixError, DomainError):
            logger.debug("Newton stopped on a singular Jacobian at iteration %d", it)
            return NewtonReport(x, norm, it - 1, False)

        damping = 1.0
        trial_x = x + step
        trial_r = residual(trial_x)
        for _ in range(max_halvings):
            if trial_r is not None and float(np.max(np.abs(trial_r))) < norm:
                break
            damping *= 0.5
            trial_x = x + damping * step
            trial_r = residual(trial_x)
        if trial_r is None:
            return NewtonReport(x, norm, it, False)
        x, r = trial_x, trial_r
        norm = float(np.max(np.abs(r)))

    return NewtonReport(x, norm, max_iter, norm <= tol)


def poly_real_roots(coeffs: ArrayLike, imag_tol: float = 1e-6) -> list[float]:
    """Real roots of a polynomial given highest-degree coefficient first.

    Roots come from the companion-matrix eigenvalues, are refined by Newton on
    the polynomial and returned in ascending order with multiplicity.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or not np.all(np.isfinite(c)):
        raise DomainError("Polynomial coefficients must be a finite 1-D sequence.")
    cmax = float(np.max(np.abs(c))) if c.size else 0.0
    nz = np.flatnonzero(np.abs(c) > 1e-300 + 1e-15 * cmax)
    if nz.size == 0:
        raise DomainError("Zero polynomial has no well-defined roots.")
    c = c[nz[0]:]
    if c.size < 2:
        raise DomainError("Polynomial of degree 0 has no roots.", {"coefficients": c.tolist()})

    try:
        candidates = np.roots(c)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("Companion eigen-solve failed.", {"coefficients": c.tolist()}) from exc

    dc = np.polyder(c)
    roots: list[float] = []
    for z in candidates:
        if abs(z.imag) > imag_tol * max(1.0, abs(z.real)):
            continue
        x = float(z.real)
        for _ in range(50):
            scale = float(np.polyval(np.abs(c), abs(x)))
            value = float(np.polyval(c, x))
            if abs(value) <= 1e-10 * max(scale, 1e-300):
                break
            slope = float(np.polyval(dc, x))
            if slope == 0.0:
                break
            x_new = x - value / slope
            # multiple roots converge linearly; stop once Newton stalls
            if abs(x_new - x) <= 1e-15 * max(1.0, abs(x)):
                x = x_new
                break
            x = x_new
        roots.append(x)
    return sorted(roots)


def fd_jacobian(f: Callable[[FloatArray], FloatArray], x: ArrayLike, rel_step: float = 1e-6) -> FloatArray:
    """Central-difference Jacobian with step ``rel_step * (1 + |x_j|)`` per column."""
    x0 = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(np.asarray(f(x0), dtype=float))
    jac = np.empty((f0.size, x0.size))
    for j in range(x0.size):
        h = rel_step * (1.0 + abs(x0[j]))
        xp = x0.copy()
        xm = x0.copy()
        xp[j] += h
        xm[j] -= h
        jac[:, j] = (np.asarray(f(xp), dtype=float) - np.asarray(f(xm), dtype=float)) / (2.0 * h)
    return jac
