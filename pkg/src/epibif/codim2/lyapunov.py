"""First Lyapunov coefficient of a planar Hopf point by finite differences.

For ``x' = A x + B(x, x)/2 + C(x, x, x)/6 + ...`` with ``A q = i w q``,
``A^T p = -i w p`` and ``<p, q> = 1``::

    l1 = Re[ <p, C(q,q,qbar)> - 2 <p, B(q, A^-1 B(q,qbar))>
             + <p, B(qbar, (2 i w - A)^-1 B(q,q))> ] / (2 w)

``B`` and ``C`` are directional derivatives of the vector field evaluated by
central differences around the equilibrium. Only the sign is meaningful.
"""

from collections.abc import Callable
from dataclasses import dataclass
import logging

import numpy as np
from numpy.typing import NDArray

from ..core.exceptions import DomainError
from ..core.numerics import fd_jacobian
from ..schemas.params import Params
from ..system.constants import STATE_SCALE
from ..system.vector_field import jacobian_reduced, rhs_reduced

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]
Field = Callable[[FloatArray], FloatArray]

STEP_FACTOR = 1e-4
REL_CHANGE_FLAG = 0.05


@dataclass(frozen=True)
class L1Estimate:
    value: float
    flagged: bool
    halved_step_value: float


class _Derivatives:
    def __init__(self, f: Field, x0: FloatArray, h: float) -> None:
        self.f = f
        self.x0 = x0
        self.h = h

    def _at(self, v: FloatArray) -> FloatArray:
        return np.asarray(self.f(self.x0 + v), dtype=float)

    def bilinear(self, x: FloatArray, y: FloatArray) -> FloatArray:
        h = self.h
        s, d = x + y, x - y
        return (self._at(h * s) + self._at(-h * s) - self._at(h * d) - self._at(-h * d)) / (4.0 * h * h)

    def cubic(self, v: FloatArray) -> FloatArray:
        h = self.h
        return (self._at(2 * h * v) - self._at(-2 * h * v) - 2 * self._at(h * v) + 2 * self._at(-h * v)) / (
            2.0 * h**3
        )

    def B(self, x: ComplexArray, y: ComplexArray) -> ComplexArray:
        xr, xi, yr, yi = x.real, x.imag, y.real, y.imag
        real = self.bilinear(xr, yr) - self.bilinear(xi, yi)
        imag = self.bilinear(xr, yi) + self.bilinear(xi, yr)
        return real + 1j * imag

    def C_qqqbar(self, q: ComplexArray) -> ComplexArray:
        a, b = q.real, q.imag
        ta, tb = self.cubic(a), self.cubic(b)
        t_plus, t_minus = self.cubic(a + b), self.cubic(a - b)
        c_abb = (t_plus + t_minus - 2 * ta) / 6.0
        c_aab = (t_plus - t_minus - 2 * tb) / 6.0
        return (ta + c_abb) + 1j * (c_aab + tb)


def first_lyapunov_coefficient(f: Field, x0: FloatArray, A: FloatArray | None = None, h: float | None = None) -> float:
    """l1 of ``x' = f(x)`` at the equilibrium ``x0`` of a planar Hopf point."""
    x0 = np.asarray(x0, dtype=float)
    if A is None:
        A = fd_jacobian(f, x0)
    det = float(np.linalg.det(A))
    if det <= 0.0:
        raise DomainError("Degenerate linearization: det A <= 0 at the Hopf point.", {"det": det})
    omega = float(np.sqrt(det))

    eigvals, right = np.linalg.eig(A)
    k = int(np.argmax(eigvals.imag))
    if eigvals[k].imag <= 0.0:
        raise DomainError("Linearization has no complex eigenvalue pair.", {"eigenvalues": eigvals.tolist()})
    q = right[:, k].astype(complex)
    q /= np.linalg.norm(q)
    eigvals_t, left = np.linalg.eig(A.T)
    p = left[:, int(np.argmin(eigvals_t.imag))].astype(complex)
    p /= np.conj(np.vdot(p, q))

    step = STEP_FACTOR * (1.0 + float(np.linalg.norm(x0))) if h is None else h
    d = _Derivatives(f, x0, step)
    qbar = np.conj(q)
    A_c = A.astype(complex)
    eye = np.eye(2, dtype=complex)
    h11 = np.linalg.solve(A_c, d.B(q, qbar))
    h20 = np.linalg.solve(2j * omega * eye - A_c, d.B(q, q))
    total = np.vdot(p, d.C_qqqbar(q)) - 2.0 * np.vdot(p, d.B(q, h11)) + np.vdot(p, d.B(qbar, h20))
    return float(total.real / (2.0 * omega))


def lyapunov_l1(p: Params, hopf_state: FloatArray, omega: float | None = None) -> L1Estimate:
    """First Lyapunov coefficient at a Hopf point of the model.

    Works in the scaled coordinates ``(S/1000, I/40)``. The estimate is
    repeated with half the difference step and flagged when the two differ by
    more than 5 %.
    """
    x = np.asarray(hopf_state, dtype=float)[:2]
    A = jacobian_reduced(x, p) * STATE_SCALE[None, :] / STATE_SCALE[:, None]
    if abs(float(np.trace(A))) > 1e-6 * (1.0 + float(np.max(np.abs(A)))):
        logger.debug("l1 requested away from trace 0 (trace=%.3g)", float(np.trace(A)))
    if omega is not None and omega <= 0.0:
        raise DomainError("Hopf frequency must be positive.", {"omega": omega})

    def f(z: FloatArray) -> FloatArray:
        return rhs_reduced(z * STATE_SCALE, p) / STATE_SCALE

    z0 = x / STATE_SCALE
    h = STEP_FACTOR * (1.0 + float(np.linalg.norm(z0)))
    value = first_lyapunov_coefficient(f, z0, A, h)
    halved = first_lyapunov_coefficient(f, z0, A, h / 2)
    flagged = abs(value - halved) > REL_CHANGE_FLAG * max(abs(value), 1e-300)
    if flagged:
        logger.warning(
            "l1 estimate at gamma=%.6g rho=%.6g is step-sensitive (%.3g vs %.3g)", p.gamma, p.rho, value, halved
        )
    return L1Estimate(value=value, flagged=flagged, halved_step_value=halved)
