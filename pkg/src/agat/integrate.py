"""Fixed-step group-preserving RK4 integration.

Velocities are integrated classically; configurations are reconstructed
through the group exponential, ``R <- R exp(hat(delta))`` with ``delta``
the RK4 angle increment.  Because the group is abelian this is classical
RK4 on (angle, rate) and retains the full fourth order, while trajectories
never leave SO(2): every stored rotation is re-projected once per step and
stays orthogonal to rounding accuracy over arbitrarily long runs.

No adaptivity: fixed steps make every run bit-for-bit reproducible, which
the regression fixtures rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import so2
from .pendubot import (DegenerateInertiaError, PendubotParams,
                       PendubotState, _raw_accelerations, coefficients,
                       total_energy)
from .tracking import GainSet, ReferenceTrajectory, closed_loop_energy, psi

__all__ = [
    "IntegratorSpec",
    "TrackingProbes",
    "TrajectoryRecord",
    "NonFiniteStateError",
    "zero_torque",
    "step",
    "simulate",
    "lie_rk4_step",
]

TorqueFn = Callable[[PendubotState, float], float]


class NonFiniteStateError(RuntimeError):
    """A state component became NaN or infinite during integration."""

    def __init__(self, t: float):
        super().__init__(f"non-finite state at t = {t:.6g}")
        self.t = t


@dataclass(frozen=True)
class IntegratorSpec:
    """Step size, horizon and output decimation."""

    dt: float
    t_end: float
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least one step")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class TrackingProbes:
    """Reference and gains used to evaluate error diagnostics per record."""

    ref: ReferenceTrajectory
    gains: GainSet


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled trajectory with per-row diagnostics.

    ``psi``, ``e_cl``, ``eta`` and ``rref`` are populated only when probes
    are supplied; ``energy`` (K + V) is always recorded.
    """

    t: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    torque: np.ndarray
    energy: np.ndarray
    psi: Optional[np.ndarray] = None
    e_cl: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None
    rref: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.t.shape[0]

    def state(self, k: int) -> PendubotState:
        return PendubotState(self.r1[k], self.r2[k],
                             float(self.w1[k]), float(self.w2[k]))


def zero_torque(state: PendubotState, t: float) -> float:
    """Unforced dynamics."""
    return 0.0


def _entries(r: np.ndarray) -> tuple[float, float]:
    return r[0, 0], r[1, 0]


def _compose(c: float, s: float, delta: float) -> np.ndarray:
    cd, sd = math.cos(delta), math.sin(delta)
    cn = c * cd - s * sd
    sn = s * cd + c * sd
    return np.array([[cn, -sn], [sn, cn]])


def step(state: PendubotState, torque_fn: TorqueFn, t: float, dt: float,
         params: PendubotParams) -> PendubotState:
    """One RK4 step; rotations advance by the exponential of the increment.

    The torque is re-evaluated at every stage state (the controller is an
    algebraic feedback, so stage evaluation preserves the integration
    order).  The returned rotations are re-projected onto SO(2).
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    c1, s1 = _entries(state.r1)
    c2, s2 = _entries(state.r2)
    w1, w2 = state.w1, state.w2

    def f(d1, d2, v1, v2, ts):
        stage = PendubotState(_compose(c1, s1, d1), _compose(c2, s2, d2),
                              v1, v2)
        u = torque_fn(stage, ts)
        a1, a2 = _raw_accelerations(*_entries(stage.r1), *_entries(stage.r2),
                                    v1, v2, u, params)
        return v1, v2, a1, a2

    h = 0.5 * dt
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = f(0.0, 0.0, w1, w2, t)
            k2 = f(h * k1[0], h * k1[1], w1 + h * k1[2], w2 + h * k1[3], t + h)
            k3 = f(h * k2[0], h * k2[1], w1 + h * k2[2], w2 + h * k2[3], t + h)
            k4 = f(dt * k3[0], dt * k3[1], w1 + dt * k3[2], w2 + dt * k3[3],
                   t + dt)
    except DegenerateInertiaError:
        raise
    except (OverflowError, ValueError):
        # escaped trajectories break trig or rotation validation mid-stage
        raise NonFiniteStateError(t + dt) from None

    sixth = dt / 6.0
    d1 = sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
    d2 = sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
    v1 = w1 + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
    v2 = w2 + sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
    if not (math.isfinite(d1) and math.isfinite(d2)
            and math.isfinite(v1) and math.isfinite(v2)):
        raise NonFiniteStateError(t + dt)
    return PendubotState(so2.project_rotation(_compose(c1, s1, d1)),
                         so2.project_rotation(_compose(c2, s2, d2)), v1, v2)


def simulate(initial: PendubotState, torque_fn: TorqueFn,
             spec: IntegratorSpec, params: PendubotParams,
             probes: Optional[TrackingProbes] = None) -> TrajectoryRecord:
    """Integrate and sample every ``record_stride`` steps.

    All per-row diagnostics are evaluated on the same state snapshot.  The
    final state is always recorded even when it falls off the stride.
    Errors raised during stepping propagate with the failing time attached.
    """
    n = spec.n_steps
    rows = list(range(0, n + 1, spec.record_stride))
    if rows[-1] != n:
        rows.append(n)
    nr = len(rows)
    rec_t = np.empty(nr)
    rec_r1 = np.empty((nr, 2, 2))
    rec_r2 = np.empty((nr, 2, 2))
    rec_w1 = np.empty(nr)
    rec_w2 = np.empty(nr)
    rec_u = np.empty(nr)
    rec_en = np.empty(nr)
    if probes is not None:
        rec_psi = np.empty(nr)
        rec_ecl = np.empty(nr)
        rec_eta = np.empty(nr)
        rec_rref = np.empty((nr, 2, 2))

    state = initial
    row = 0
    for k in range(n + 1):
        t = k * spec.dt
        if k == rows[row]:
            rec_t[row] = t
            rec_r1[row] = state.r1
            rec_r2[row] = state.r2
            rec_w1[row] = state.w1
            rec_w2[row] = state.w2
            with np.errstate(over="ignore", invalid="ignore"):
                rec_u[row] = torque_fn(state, t)
                rec_en[row] = total_energy(state, params)
            if probes is not None:
                rref = probes.ref.r_of_t(t)
                e = rref @ state.r2.T
                eta = probes.ref.w_of_t(t) - state.w2
                rec_rref[row] = rref
                rec_psi[row] = psi(e, probes.gains.p)
                schur = coefficients(state, params).schur
                rec_ecl[row] = (probes.gains.kp * rec_psi[row]
                                + 0.5 * schur * eta * eta)
                rec_eta[row] = eta
            row += 1
        if k < n:
            state = step(state, torque_fn, t, spec.dt, params)

    if probes is None:
        return TrajectoryRecord(rec_t, rec_r1, rec_r2, rec_w1, rec_w2,
                                rec_u, rec_en)
    return TrajectoryRecord(rec_t, rec_r1, rec_r2, rec_w1, rec_w2, rec_u,
                            rec_en, rec_psi, rec_ecl, rec_eta, rec_rref)


def lie_rk4_step(rotations: Sequence[np.ndarray], rates: np.ndarray,
                 accel_fn: Callable[[list[np.ndarray], np.ndarray, float], np.ndarray],
                 t: float, dt: float) -> tuple[list[np.ndarray], np.ndarray]:
    """Generic RK4 step for a tuple of rotations with rate vector.

    ``accel_fn(rotations, rates, t)`` returns the rate derivatives.  Used
    for chains of more than two links; the pendubot path has its own
    unrolled version in :func:`step`.
    """
    rates = np.asarray(rates, dtype=float)

    def f(deltas, v, ts):
        rs = [r @ so2.exp_so2(d) for r, d in zip(rotations, deltas)]
        return np.asarray(v, dtype=float), accel_fn(rs, v, ts)

    z = np.zeros_like(rates)
    h = 0.5 * dt
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            d1, a1 = f(z, rates, t)
            d2, a2 = f(h * d1, rates + h * a1, t + h)
            d3, a3 = f(h * d2, rates + h * a2, t + h)
            d4, a4 = f(dt * d3, rates + dt * a3, t + dt)
    except DegenerateInertiaError:
        raise
    except (OverflowError, ValueError):
        raise NonFiniteStateError(t + dt) from None
    delta = dt / 6.0 * (d1 + 2.0 * (d2 + d3) + d4)
    new_rates = rates + dt / 6.0 * (a1 + 2.0 * (a2 + a3) + a4)
    if not (np.all(np.isfinite(delta)) and np.all(np.isfinite(new_rates))):
        raise NonFiniteStateError(t + dt)
    new_rot = [so2.project_rotation(r @ so2.exp_so2(d))
               for r, d in zip(rotations, delta)]
    return new_rot, new_rates
