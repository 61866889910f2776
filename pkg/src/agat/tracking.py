"""Almost-global tracking of the pendubot's passive elbow.

The control objective is to make the elbow rotation ``R2`` follow a smooth
bounded reference ``Rref(t)``.  Everything is phrased through the
group-valued tracking error

    E = Rref R2',        eta = vee(E' Edot) = w_ref - w2,

which is the identity exactly when tracking is achieved.  The synthesis is
a two-step separation:

1.  The shoulder torque cancels every quadratic-rate and gravity term the
    elbow feels through the inertial coupling, and injects a chosen force
    through the coupling column.  The elbow error then obeys a clean forced
    geodesic equation ``schur * etadot = u`` with the configuration error
    evolving as ``Edot = E hat(eta)``.
2.  The injected force is a navigation-function PD law plus reference
    feedforward.  The potential ``psi(E) = tr(P (id - E))`` has exactly two
    critical points (the identity, a minimum, and the half-turn, a
    nondegenerate maximum), so the error flow converges to the identity
    from every initial condition off the antipode's stable set: tracking is
    almost-global.

Along the closed loop the energy-like function

    E_cl = Kp psi(E) + 1/2 schur eta^2

is nonincreasing; the dissipative part of the injected force makes its
derivative ``(tr(Fd)/2) eta^2 <= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import so2
from .pendubot import PendubotParams, PendubotState, coefficients

__all__ = [
    "GainSet",
    "ReferenceTrajectory",
    "ErrorState",
    "CouplingSingularityError",
    "error_state",
    "psi",
    "psi_critical_points",
    "closed_loop_energy",
    "stabilizing_force",
    "error_acceleration",
    "tracking_torque",
    "simulate_error_flow",
]


class CouplingSingularityError(RuntimeError):
    """The elbow coupling coefficient K2 is (numerically) zero.

    The torque law divides by K2; configurations where the inertial
    coupling vanishes cannot be crossed with finite torque and must fail
    loudly instead of emitting garbage.
    """


@dataclass(frozen=True)
class GainSet:
    """Controller tuning: proportional gain, dissipation matrix, PD weights.

    ``fd`` must have negative trace (net dissipation) and ``p`` is a
    diagonal weight matrix with nonzero trace, which is exactly what the
    navigation function needs to have nondegenerate critical points.
    """

    kp: float
    fd: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kp", float(self.kp))
        fd = np.asarray(self.fd, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if self.kp <= 0.0:
            raise ValueError("kp must be positive")
        if fd.shape != (2, 2) or p.shape != (2, 2):
            raise ValueError("fd and p must be 2x2 matrices")
        if not np.trace(fd) < 0.0:
            raise ValueError("fd must have negative trace (dissipation)")
        if p[0, 1] != 0.0 or p[1, 0] != 0.0:
            raise ValueError("p must be diagonal")
        if np.trace(p) == 0.0:
            raise ValueError("p must have nonzero trace")
        fd.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "fd", fd)
        object.__setattr__(self, "p", p)

    @classmethod
    def diagonal(cls, kp, fd_diag, p_diag) -> "GainSet":
        """Build from diagonal entries, e.g. ``diagonal(2.3, (-1.5, -2), (1, 1.5))``."""
        return cls(kp, np.diag(np.asarray(fd_diag, dtype=float)),
                   np.diag(np.asarray(p_diag, dtype=float)))


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Reference rotation with analytic rate and acceleration.

    ``wdot_of_t`` is supplied analytically rather than differenced: the
    feedforward term of the torque needs it and numerical differentiation
    would inject noise.
    """

    r_of_t: Callable[[float], np.ndarray]
    w_of_t: Callable[[float], float]
    wdot_of_t: Callable[[float], float]

    @classmethod
    def constant_rate(cls, rate: float, phase: float = 0.0) -> "ReferenceTrajectory":
        """Uniform rotation ``exp(rate * t + phase)``."""
        rate = float(rate)
        phase = float(phase)
        return cls(lambda t: so2.exp_so2(rate * t + phase),
                   lambda t: rate, lambda t: 0.0)

    @classmethod
    def hold(cls, angle: float = 0.0) -> "ReferenceTrajectory":
        """Constant reference at a fixed angle (stabilization)."""
        r = so2.exp_so2(float(angle))
        r.flags.writeable = False
        return cls(lambda t: r, lambda t: 0.0, lambda t: 0.0)


@dataclass(frozen=True)
class ErrorState:
    """Tracking error configuration and body rate ``(E, eta)``."""

    e: np.ndarray
    eta: float


def error_state(state: PendubotState, ref: ReferenceTrajectory,
                t: float) -> ErrorState:
    """Error ``E = Rref(t) R2'`` and its body rate ``eta = w_ref - w2``.

    The rate is the abelian evaluation of ``vee(E' Edot)`` with
    ``Edot = Rref (hat(w_ref) - hat(w2)) R2'``.
    """
    e = ref.r_of_t(t) @ state.r2.T
    return ErrorState(e, ref.w_of_t(t) - state.w2)


def psi(e: np.ndarray, p: np.ndarray) -> float:
    """Navigation function ``tr(P (id - E))``.

    On rotations this equals ``(1 - E11) (c1 + c2)``: zero exactly at the
    identity, maximal at the half-turn.
    """
    return float(np.trace(p @ (np.eye(2) - e)))


def psi_critical_points(p: np.ndarray) -> list[np.ndarray]:
    """Critical rotations of ``psi``: the identity and the half-turn.

    These are the solutions of ``skew(P E) = 0`` overrotations whenever
    ``tr(P) != 0``; the tests confirm by grid search that no others exist.
    """
    if np.trace(p) == 0.0:
        raise ValueError("p must have nonzero trace")
    return [so2.identity(), -so2.identity()]


def closed_loop_energy(err: ErrorState, schur: float, gains: GainSet) -> float:
    """Energy-like function ``Kp psi(E) + 1/2 schur eta^2``."""
    if not schur > 0.0:
        raise ValueError("schur must be positive")
    return gains.kp * psi(err.e, gains.p) + 0.5 * schur * err.eta * err.eta


def stabilizing_force(err: ErrorState, gains: GainSet) -> float:
    """Navigation-function PD force on the error, in the body frame.

    The proportional part is ``-2 Kp vee(skew(P E))``, the body-frame
    gradient force of ``psi``; the dissipative part contracts ``Fd``
    against the error rate and reduces, by the 2x2 identity
    ``skew(S hat(x)) = (tr(S)/2) hat(x)`` for symmetric ``S``, to
    ``(tr(Fd)/2) eta``.
    """
    pd = -2.0 * gains.kp * so2.vee(so2.skew(gains.p @ err.e))
    return pd + 0.5 * float(np.trace(gains.fd)) * err.eta


def error_acceleration(err: ErrorState, schur: float, gains: GainSet) -> float:
    """Rate of the error body velocity for the reduced error dynamics.

    ``etadot = stabilizing_force / schur`` minus the metric connection
    term, which vanishes on an abelian group but is evaluated through
    :func:`so2.connection_term` all the same.
    """
    if not schur > 0.0:
        raise ValueError("schur must be positive")
    conn = so2.connection_term(err.eta, err.eta, schur)
    return stabilizing_force(err, gains) / schur - conn


def tracking_torque(state: PendubotState, ref: ReferenceTrajectory, t: float,
                    gains: GainSet, params: PendubotParams) -> float:
    """Shoulder torque for almost-global tracking of the elbow reference.

    Scaled by the inverse coupling ``2 K1 / K2``, the torque stacks three
    groups of terms:

    * the stabilizing PD force on the error, carried through the coadjoint
      action of ``R2`` (the identity here, evaluated via :mod:`agat.so2`);
    * cancellation of every quadratic-rate and gravity term of the elbow
      equation;
    * feedforward of the reference acceleration through the effective
      inertia, ``schur * (wdot_ref + vee([hat(w2), hat(w_ref)]))``.

    Substituted into the elbow equation, all state-dependent terms cancel
    and the error obeys ``schur * etadot = stabilizing_force`` exactly; the
    tests check this identity to rounding accuracy.

    Raises
    ------
    CouplingSingularityError
        If ``|K2|`` falls below ``1e-9 * 2 I2``.  K2 can vanish for
        geometries with small elbow inertia; crossing such a configuration
        needs unbounded torque.
    """
    c = coefficients(state, params)
    if abs(c.k2) <= 1e-9 * (2.0 * params.i2):
        raise CouplingSingularityError(
            f"elbow coupling K2 = {c.k2:.3e} is numerically singular")
    err = error_state(state, ref, t)
    u = stabilizing_force(err, gains)
    # coadjoint carry and rate bracket: both trivial on SO(2), both evaluated
    u = so2.vee(state.r2.T @ so2.hat(u) @ state.r2)
    bracket = so2.vee(so2.commutator(so2.hat(state.w2),
                                     so2.hat(ref.w_of_t(t))))
    w1, w2 = state.w1, state.w2
    feedforward = c.schur * (ref.wdot_of_t(t) + bracket)
    return (2.0 * c.k1 / c.k2) * (
        u
        + (c.k2 / (2.0 * c.k1)) * (c.alpha * (2.0 * w1 + w2) + c.gamma1)
        - c.alpha * w1
        + c.beta * (w1 * w1 + w1 * w2)
        - c.gamma2
        - feedforward
    )


def simulate_error_flow(phi0: float, eta0: float, gains: GainSet,
                        schur, dt: float, t_end: float,
                        record_stride: int = 1):
    """Integrate the reduced error dynamics in angle coordinates.

    The error rotation is parameterized as ``E = exp(phi)`` so the flow is
    ``phidot = eta``, ``etadot = stabilizing_force / schur``.  ``schur``
    is either a positive constant (the idealized error system with a fixed
    metric) or a callable ``schur(t, phi)`` returning the effective inertia
    of the plant configuration the error corresponds to, which makes this
    2-state integration replicate the full closed loop exactly.

    Returns ``(t, phi, eta)`` arrays sampled every ``record_stride`` steps
    (final row always included), integrated with the same fixed-step RK4
    as the full simulator.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    schur_fn = schur if callable(schur) else (lambda t, phi: schur)
    kp_tr = gains.kp * float(np.trace(gains.p))
    fd_half = 0.5 * float(np.trace(gains.fd))

    def force(phi, eta):
        return -kp_tr * math.sin(phi) + fd_half * eta

    n = int(round(t_end / dt))
    rows = list(range(0, n + 1, record_stride))
    if rows[-1] != n:
        rows.append(n)
    out_t = np.empty(len(rows))
    out_phi = np.empty(len(rows))
    out_eta = np.empty(len(rows))
    phi, eta = float(phi0), float(eta0)
    row = 0
    h = 0.5 * dt
    for k in range(n + 1):
        t = k * dt
        if k == rows[row]:
            out_t[row] = t
            out_phi[row] = phi
            out_eta[row] = eta
            row += 1
        if k == n:
            break
        a1 = force(phi, eta) / schur_fn(t, phi)
        p2, e2 = phi + h * eta, eta + h * a1
        a2 = force(p2, e2) / schur_fn(t + h, p2)
        p3, e3 = phi + h * e2, eta + h * a2
        a3 = force(p3, e3) / schur_fn(t + h, p3)
        p4, e4 = phi + dt * e3, eta + dt * a3
        a4 = force(p4, e4) / schur_fn(t + dt, p4)
        phi += dt / 6.0 * (eta + 2.0 * (e2 + e3) + e4)
        eta += dt / 6.0 * (a1 + 2.0 * (a2 + a3) + a4)
    return out_t, out_phi, out_eta
