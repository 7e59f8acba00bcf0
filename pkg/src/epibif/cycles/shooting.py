"""Periodic orbits of the planar system by (multiple) shooting.

Everything is done in the scaled coordinates ``z = (S/1000, I/40)``. The
unknowns are ``u = (z_0, ..., z_{m-1}, ln T, p / p_scale)``: the start points
of ``m`` equal time segments, the log-period and the active parameter. The
boundary-value residual is::

    phi(z_k, T/m) - z_{k+1}      k = 0 .. m-1   (z_m = z_0)
    f_I(z_0)                     phase condition: I' = 0 at the first seed

Segments are integrated together with the variational equations, so the
same flow provides the residual, its Jacobian, the monodromy matrix and,
through its dense output, the phase mesh.
"""

from collections.abc import Callable
from dataclasses import dataclass
import logging
import math

import numpy as np
from numpy.typing import NDArray

from ..core.exceptions import ConvergenceError, DomainError, StiffnessSuspectedError
from ..core.numerics import newton
from ..models.branch import SpecialKind, SpecialPoint
from ..models.cycle import Cycle, CycleStability
from ..odeflow.integrator import integrate_flow
from ..schemas.params import ActiveParam, Params
from ..system.constants import STATE_SCALE
from ..system.vector_field import jacobian_reduced, parameter_derivative, planar_field

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

SEMISTABLE_LOG_TOL = 1e-8
MAX_SEGMENT_STEPS = 400_000


@dataclass(frozen=True)
class ShootingSettings:
    segments: int = 1
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    newton_tol: float = 1e-9
    max_iter: int = 15
    mesh_points: int = 100


@dataclass(frozen=True)
class SegmentFlow:
    end: FloatArray
    monodromy: FloatArray
    sensitivity: FloatArray
    end_velocity: FloatArray
    samples: FloatArray


def _variational_rhs(p: Params, active: ActiveParam) -> Callable[[float, FloatArray], FloatArray]:
    """State, fundamental matrix and parameter sensitivity in one 8-vector, scaled."""
    beta, lam, mu, mu_prime, alpha, gamma, rho = p.as_tuple()
    m = mu + mu_prime
    s_unit, i_unit = (float(v) for v in STATE_SCALE)
    by_gamma = active is ActiveParam.GAMMA

    def rhs(_t: float, y: FloatArray) -> FloatArray:
        zS, zI, p00, p01, p10, p11, q0, q1 = y.tolist()
        S, I = zS * s_unit, zI * i_unit
        u = 1.0 + gamma * S
        w = 1.0 + rho * I
        a00 = -mu - beta * I / (u * u)
        a01 = -beta * S / u * (i_unit / s_unit)
        a10 = beta * I / (u * u) * (s_unit / i_unit)
        a11 = -m + beta * S / u - alpha / (w * w)
        if by_gamma:
            d = beta * S * S * I / (u * u)
            d0, d1 = d / s_unit, -d / i_unit
        else:
            d0, d1 = 0.0, alpha * I * I / (w * w) / i_unit
        incidence = beta * S * I / u
        dS = lam - mu * S - incidence
        dI = -m * I + incidence - alpha * I / w
        return np.array(
            [
                dS / s_unit,
                dI / i_unit,
                a00 * p00 + a01 * p10,
                a00 * p01 + a01 * p11,
                a10 * p00 + a11 * p10,
                a10 * p01 + a11 * p11,
                a00 * q0 + a01 * q1 + d0,
                a10 * q0 + a11 * q1 + d1,
            ]
        )

    return rhs


def scaled_field(p: Params, z: FloatArray) -> FloatArray:
    return planar_field(p)(0.0, np.asarray(z, dtype=float) * STATE_SCALE) / STATE_SCALE


def scaled_jacobian(p: Params, z: FloatArray) -> FloatArray:
    return jacobian_reduced(np.asarray(z, dtype=float) * STATE_SCALE, p) * STATE_SCALE[None, :] / STATE_SCALE[:, None]


class ShootingSystem:
    """Shooting equations of the cycle family with ``active`` free.

    Flows are cached for the most recent ``u`` so a residual evaluation and
    the Jacobian at the same point integrate only once.
    """

    def __init__(
        self,
        params: Params,
        active: ActiveParam,
        segments: int = 1,
        p_scale: float = 1.0,
        settings: ShootingSettings | None = None,
    ) -> None:
        if segments < 1:
            raise DomainError("At least one shooting segment is required.", {"segments": segments})
        self.params = params
        self.active = active
        self.segments = segments
        self.p_scale = p_scale
        self.settings = settings or ShootingSettings(segments=segments)
        self._cache_key: bytes | None = None
        self._cache: list[SegmentFlow] | None = None

    @property
    def size(self) -> int:
        return 2 * self.segments + 2

    def pack(self, seeds: FloatArray, period: float, value: float) -> FloatArray:
        return np.concatenate([np.asarray(seeds, dtype=float).ravel(), [math.log(period), value / self.p_scale]])

    def seeds_of(self, u: FloatArray) -> FloatArray:
        return u[: 2 * self.segments].reshape(self.segments, 2)

    def period_of(self, u: FloatArray) -> float:
        return math.exp(float(u[2 * self.segments]))

    def params_of(self, u: FloatArray) -> Params:
        return self.params.with_value(self.active, float(u[-1] * self.p_scale))

    def _mesh_layout(self, u: FloatArray) -> tuple[FloatArray, NDArray[np.int_], float]:
        n = self.settings.mesh_points
        tau = self.period_of(u) / self.segments
        times = np.linspace(0.0, self.period_of(u), n)
        owner = np.minimum((times / tau).astype(int), self.segments - 1)
        return times, owner, tau

    def flows(self, u: FloatArray) -> list[SegmentFlow] | None:
        key = u.tobytes()
        if key == self._cache_key:
            return self._cache
        p = self.params_of(u)
        times, owner, tau = self._mesh_layout(u)
        rhs = _variational_rhs(p, self.active)
        rtol, atol = self.settings.rel_tol, self.settings.abs_tol
        out: list[SegmentFlow] | None = []
        for k, z in enumerate(self.seeds_of(u)):
            y0 = np.concatenate([z, np.eye(2).ravel(), np.zeros(2)])
            local = np.clip(times[owner == k] - k * tau, 0.0, tau)
            try:
                flow = integrate_flow(rhs, y0, (0.0, tau), rtol, atol, t_eval=local, max_steps=MAX_SEGMENT_STEPS)
            except (StiffnessSuspectedError, DomainError) as exc:
                logger.debug("Shooting segment failed: %s", exc.message)
                out = None
                break
            y = flow.y_end
            if flow.t_end < tau or not np.all(np.isfinite(y)):
                out = None
                break
            end_velocity = scaled_field(p, y[:2])
            out.append(SegmentFlow(y[:2], y[2:6].reshape(2, 2), y[6:], end_velocity, flow.eval_states[:, :2]))
        self._cache_key, self._cache = key, out
        return out

    def residual(self, u: FloatArray) -> FloatArray:
        flows = self.flows(u)
        m = self.segments
        if flows is None:
            return np.full(2 * m + 1, np.nan)
        seeds = self.seeds_of(u)
        r = np.empty(2 * m + 1)
        for k, fl in enumerate(flows):
            r[2 * k : 2 * k + 2] = fl.end - seeds[(k + 1) % m]
        r[-1] = scaled_field(self.params_of(u), seeds[0])[1]
        return r

    def jacobian(self, u: FloatArray) -> FloatArray:
        flows = self.flows(u)
        if flows is None:
            raise DomainError("Shooting flow unavailable at this point.")
        m = self.segments
        tau = self.period_of(u) / m
        p = self.params_of(u)
        jac = np.zeros((2 * m + 1, 2 * m + 2))
        for k, fl in enumerate(flows):
            rows = slice(2 * k, 2 * k + 2)
            jac[rows, 2 * k : 2 * k + 2] += fl.monodromy
            nxt = (k + 1) % m
            jac[rows, 2 * nxt : 2 * nxt + 2] -= np.eye(2)
            jac[rows, 2 * m] = fl.end_velocity * tau
            jac[rows, 2 * m + 1] = fl.sensitivity * self.p_scale
        z0 = self.seeds_of(u)[0]
        jac[-1, :2] = scaled_jacobian(p, z0)[1]
        jac[-1, 2 * m + 1] = parameter_derivative(z0 * STATE_SCALE, p, self.active)[1] / STATE_SCALE[1] * self.p_scale
        return jac

    def monodromy(self, u: FloatArray) -> FloatArray:
        flows = self.flows(u)
        if flows is None:
            raise DomainError("Shooting flow unavailable at this point.")
        M = np.eye(2)
        for fl in flows:
            M = fl.monodromy @ M
        return M

    def mesh(self, u: FloatArray) -> FloatArray:
        """``mesh_points`` states at uniform phase, unscaled, first and last on the seed.

        Read from the dense output of the same integration that gives the
        residual and the monodromy.
        """
        flows = self.flows(u)
        if flows is None:
            raise DomainError("Shooting flow unavailable at this point.")
        _times, owner, _tau = self._mesh_layout(u)
        mesh = np.empty((owner.size, 2))
        for k, fl in enumerate(flows):
            mesh[owner == k] = fl.samples * STATE_SCALE
        return mesh


def stability_from_monodromy(M: FloatArray) -> tuple[tuple[complex, complex], CycleStability]:
    """Multipliers ordered trivial first, and the stability they imply.

    For a planar cycle the nontrivial multiplier equals ``det M`` divided by
    the trivial one, so stability follows from ``|det M|``.
    """
    eigs = np.linalg.eigvals(M)
    order = np.argsort(np.abs(eigs - 1.0))
    trivial, other = complex(eigs[order[0]]), complex(eigs[order[1]])
    det = float(np.linalg.det(M))
    if det == 0.0:
        return (trivial, other), CycleStability.STABLE
    log_det = math.log(abs(det))
    if abs(log_det) <= SEMISTABLE_LOG_TOL:
        stability = CycleStability.SEMISTABLE
    else:
        stability = CycleStability.STABLE if log_det < 0.0 else CycleStability.UNSTABLE
    return (trivial, other), stability


def cycle_at(system: ShootingSystem, u: FloatArray) -> Cycle:
    multipliers, stability = stability_from_monodromy(system.monodromy(u))
    return Cycle(
        mesh=system.mesh(u),
        period=system.period_of(u),
        params=system.params_of(u),
        multipliers=multipliers,
        stability=stability,
        seeds=system.seeds_of(u).copy(),
        residual=float(np.max(np.abs(system.residual(u)))),
    )


def floquet_multipliers(c: Cycle, active: ActiveParam = ActiveParam.GAMMA) -> tuple[complex, complex]:
    """Eigenvalues of the monodromy matrix of ``c``; the first is the trivial one."""
    system = ShootingSystem(c.params, active, segments=c.seeds.shape[0])
    u = system.pack(c.seeds, c.period, c.params.value(active))
    if system.flows(u) is None:
        raise ConvergenceError("Variational integration along the cycle failed.", {"period": c.period})
    multipliers, _ = stability_from_monodromy(system.monodromy(u))
    return multipliers


def resegment(c: Cycle, segments: int, settings: ShootingSettings | None = None) -> FloatArray:
    """Scaled seeds at ``t_k = k T / segments`` along the orbit of ``c``."""
    settings = settings or ShootingSettings()
    p = c.params

    def f(_t: float, z: FloatArray) -> FloatArray:
        return scaled_field(p, z)

    times = np.arange(segments) * c.period / segments
    flow = integrate_flow(
        f, c.seeds[0], (0.0, c.period), settings.rel_tol, settings.abs_tol, t_eval=times, max_steps=MAX_SEGMENT_STEPS
    )
    return flow.eval_states


def correct_cycle(
    p: Params,
    seeds: FloatArray,
    period: float,
    settings: ShootingSettings | None = None,
) -> Cycle:
    """Newton on the shooting system at fixed parameters.

    Raises
    ------
    ConvergenceError
        If the corrector does not reach ``newton_tol``.
    """
    settings = settings or ShootingSettings()
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    system = ShootingSystem(p, ActiveParam.GAMMA, seeds.shape[0], settings=settings)
    full = system.pack(seeds, period, p.gamma)
    fixed = full[-1]

    def F(v: FloatArray) -> FloatArray:
        return system.residual(np.append(v, fixed))

    def J(v: FloatArray) -> FloatArray:
        return system.jacobian(np.append(v, fixed))[:, :-1]

    report = newton(F, J, full[:-1], tol=settings.newton_tol, max_iter=settings.max_iter)
    if not report.converged:
        raise ConvergenceError(
            "Cycle corrector did not converge.", {"residual": report.residual_norm, "period_guess": period}
        )
    return cycle_at(system, np.append(report.root, fixed))


def _hopf_guess(hb: SpecialPoint, amplitude: float) -> tuple[FloatArray, float]:
    z_eq = np.asarray(hb.state, dtype=float)[:2] / STATE_SCALE
    A = scaled_jacobian(hb.params, z_eq)
    det = float(np.linalg.det(A))
    if det <= 0.0:
        raise DomainError("Hopf point has det J <= 0.", {"det": det})
    omega = hb.aux.get("omega") or math.sqrt(det)
    eigvals, vecs = np.linalg.eig(A)
    q = vecs[:, int(np.argmax(eigvals.imag))]
    if abs(q[1]) == 0.0:
        raise DomainError("Hopf eigenvector has no I component.")
    # I is maximal (I' = 0) at the start point of the linear oscillation.
    z0 = z_eq + np.real(amplitude * q / q[1])
    return z0, 2.0 * math.pi / float(omega)


def cycle_from_hopf(
    hb: SpecialPoint,
    amplitude: float = 1e-2,
    *,
    active: ActiveParam | None = None,
    settings: ShootingSettings | None = None,
) -> Cycle:
    """Small cycle near a Hopf point.

    The guess is the linear oscillation of scaled amplitude ``amplitude`` in the
    eigenplane with period ``2 pi / omega``. The active parameter is an unknown,
    closed by fixing ``z_0[I] - z_eq[I] = amplitude``, so the cycle is found on
    whichever side of the Hopf point it exists.

    Raises
    ------
    ConvergenceError
        If the corrector fails; a smaller ``amplitude`` usually helps.
    """
    if hb.kind is not SpecialKind.HB:
        raise DomainError("cycle_from_hopf expects an HB point.", {"kind": hb.kind.value})
    active = active or hb.active_param
    if active is None:
        raise DomainError("The active parameter of the Hopf point is unknown.")
    settings = settings or ShootingSettings()
    z0, period = _hopf_guess(hb, amplitude)
    z_eq_I = float(hb.state[1]) / STATE_SCALE[1]
    system = ShootingSystem(hb.params, active, 1, settings=settings)
    u0 = system.pack(z0[None, :], period, hb.params.value(active))

    def F(u: FloatArray) -> FloatArray:
        return np.append(system.residual(u), u[1] - z_eq_I - amplitude)

    def J(u: FloatArray) -> FloatArray:
        row = np.zeros(system.size)
        row[1] = 1.0
        return np.vstack([system.jacobian(u), row[None, :]])

    report = newton(F, J, u0, tol=settings.newton_tol, max_iter=settings.max_iter)
    if not report.converged:
        raise ConvergenceError(
            "Cycle corrector failed near the Hopf point; try a smaller amplitude.",
            {"amplitude": amplitude, "residual": report.residual_norm},
        )
    cycle = cycle_at(system, report.root)
    logger.info(
        "Hopf cycle at %s=%.9g: T=%.6g, multiplier %.6g (%s)",
        active.value,
        cycle.params.value(active),
        cycle.period,
        abs(cycle.nontrivial_multiplier),
        cycle.stability.value,
    )
    return cycle
