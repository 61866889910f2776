"""Pendubot dynamics on SO(2) x SO(2).

Two rigid links in a vertical plane, torque-actuated at the shoulder only.
``R1`` rotates the first link's body frame into the inertial frame; ``R2``
rotates the second link's frame into the *first link's* frame, so ``R2`` is
the passive elbow configuration.  Body rates satisfy
``Rdot_i = R_i @ hat(w_i)``.

With hinge inertias ``I1, I2`` (second moments about the respective joints;
each link's center of mass sits at mid-length) the energy pair used
throughout is

    K = K1 w1^2 + K2 w1 w2 + K3 w2^2
    V = (m1/2 + m2) g l1 e1'R1 e1  +  (m2/2) g l2 e1'R2 R1 e1

with configuration-dependent inertia coefficients

    K1 = I1 + I2 + m2 l1^2 + m2 L1'R2 L2      (L1'R2 L2 = l1 l2 cos th2)
    K2 = 2 I2 + m2 L1'R2 L2
    K3 = I2.

K carries no global 1/2: it is twice the physical kinetic energy.  The
equations of motion below are the Euler-Lagrange equations of ``K - V``
with exactly this normalization, so ``K + V`` is the conserved energy of
the unforced system; the test suite checks this by integration rather than
assuming it.

Shoulder torque enters the first equation only:

    2 K1 w1dot + K2 w2dot + alpha (2 w1 + w2) + Gamma1 = u1
    K2 w1dot + 2 K3 w2dot + alpha w1 - beta (w1^2 + w1 w2) + Gamma2 = 0

where ``alpha = dK1/dt`` along the flow, ``beta`` collects the remaining
quadratic-rate coefficient, and ``Gamma_i`` are the gravity torques
``dV/dth_i``.  Solving the pair for the rates gives ``accelerations``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import so2

__all__ = [
    "PendubotParams",
    "PendubotState",
    "CoeffSet",
    "DegenerateInertiaError",
    "coefficients",
    "kinetic_energy",
    "potential_energy",
    "total_energy",
    "accelerations",
]

_ROTATION_TOL = 1e-12


class DegenerateInertiaError(ValueError):
    """Effective elbow inertia is not positive; parameters are unphysical."""


def _check_rotation(r: np.ndarray, name: str) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (2, 2):
        raise ValueError(f"{name} must be a 2x2 matrix")
    a, b = r[0, 0], r[0, 1]
    c, d = r[1, 0], r[1, 1]
    defect = max(
        abs(a * a + c * c - 1.0),
        abs(b * b + d * d - 1.0),
        abs(a * b + c * d),
        abs(a * d - b * c - 1.0),
    )
    if not defect <= _ROTATION_TOL:
        raise ValueError(f"{name} is not a rotation (defect {defect:.3e})")
    r.flags.writeable = False
    return r


@dataclass(frozen=True)
class PendubotParams:
    """Masses, lengths, hinge inertias and gravity.

    ``i1, i2`` are the second moments about the shoulder and elbow hinges.
    They are free parameters: a bare uniform rod has ``m l^2 / 3``, while a
    geared drive adds reflected rotor inertia on top of that.
    """

    m1: float
    m2: float
    l1: float
    l2: float
    i1: float
    i2: float
    g: float = 9.8

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "i1", "i2"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.g < 0.0:
            raise ValueError("g must be nonnegative")

    @classmethod
    def uniform_rods(cls, m1, m2, l1, l2, g=9.8) -> "PendubotParams":
        """Bare uniform rods: hinge inertias ``m_k l_k^2 / 3``."""
        return cls(m1, m2, l1, l2, m1 * l1 * l1 / 3.0, m2 * l2 * l2 / 3.0, g)

    @property
    def L1(self) -> np.ndarray:
        v = np.array([0.0, self.l1])
        v.flags.writeable = False
        return v

    @property
    def L2(self) -> np.ndarray:
        v = np.array([0.0, self.l2])
        v.flags.writeable = False
        return v


@dataclass(frozen=True)
class PendubotState:
    """Configuration and body rates ``(R1, R2, w1, w2)``."""

    r1: np.ndarray
    r2: np.ndarray
    w1: float
    w2: float

    def __post_init__(self):
        object.__setattr__(self, "r1", _check_rotation(self.r1, "r1"))
        object.__setattr__(self, "r2", _check_rotation(self.r2, "r2"))
        object.__setattr__(self, "w1", float(self.w1))
        object.__setattr__(self, "w2", float(self.w2))

    @classmethod
    def from_angles(cls, th1, th2, w1, w2) -> "PendubotState":
        return cls(so2.exp_so2(th1), so2.exp_so2(th2), w1, w2)


@dataclass(frozen=True)
class CoeffSet:
    """Coefficient functions of the equations of motion at one state.

    ``schur = 2 K3 - K2^2 / (2 K1)`` is the effective inertia seen by the
    elbow once the shoulder acceleration is eliminated (the Schur complement
    of the 2x2 mass matrix ``[[2K1, K2], [K2, 2K3]]``).
    """

    k1: float
    k2: float
    k3: float
    alpha: float
    beta: float
    gamma1: float
    gamma2: float
    schur: float


def _raw_coefficients(c1, s1, c2, s2, w2, p: PendubotParams):
    """Coefficient tuple from rotation matrix entries (hot path)."""
    cpl = p.m2 * p.l1 * p.l2
    k1 = p.i1 + p.i2 + p.m2 * p.l1 * p.l1 + cpl * c2
    k2 = 2.0 * p.i2 + cpl * c2
    b2 = cpl * s2
    s12 = s1 * c2 + c1 * s2
    ag = (0.5 * p.m1 + p.m2) * p.g * p.l1
    bg = 0.5 * p.m2 * p.g * p.l2
    gamma1 = -ag * s1 - bg * s12
    gamma2 = -bg * s12
    schur = 2.0 * p.i2 - k2 * k2 / (2.0 * k1)
    return k1, k2, p.i2, -b2 * w2, -b2, gamma1, gamma2, schur


def coefficients(state: PendubotState, params: PendubotParams) -> CoeffSet:
    """Evaluate K1, K2, K3, alpha, beta, Gamma1, Gamma2 and the Schur inertia.

    Equivalent matrix expressions (checked against this implementation in
    the tests): ``alpha = m2 <L1 L2', R2 hat(w2)>`` with the trace pairing,
    ``beta = -2 m2 vee(skew(R2 L1 L2'))`` and

        Gamma1 = -2 [ (m1/2+m2) g l1 vee(skew(R1 e1 e1'))
                      + (m2/2) g l2 vee(skew(R1 R2 e1 e1')) ]
        Gamma2 = -2 (m2/2) g l2 vee(skew(R2 e1 e1' R1))

    i.e. the gravity torques are the angle gradients of the potential.

    Raises
    ------
    DegenerateInertiaError
        If the Schur-complement inertia is not positive.
    """
    r1, r2 = state.r1, state.r2
    out = CoeffSet(*_raw_coefficients(r1[0, 0], r1[1, 0], r2[0, 0], r2[1, 0],
                                      state.w2, params))
    if not out.schur > 0.0:
        raise DegenerateInertiaError(
            f"elbow Schur inertia {out.schur:.3e} <= 0")
    return out


def kinetic_energy(state: PendubotState, params: PendubotParams) -> float:
    """K1 w1^2 + K2 w1 w2 + K3 w2^2 (twice the physical kinetic energy)."""
    c = coefficients(state, params)
    return (c.k1 * state.w1 * state.w1 + c.k2 * state.w1 * state.w2
            + c.k3 * state.w2 * state.w2)


def potential_energy(state: PendubotState, params: PendubotParams) -> float:
    """(m1/2 + m2) g l1 e1'R1 e1 + (m2/2) g l2 e1'R2 R1 e1."""
    c1 = state.r1[0, 0]
    c12 = (state.r2 @ state.r1)[0, 0]
    return ((0.5 * params.m1 + params.m2) * params.g * params.l1 * c1
            + 0.5 * params.m2 * params.g * params.l2 * c12)


def total_energy(state: PendubotState, params: PendubotParams) -> float:
    """Conserved diagnostic K + V of the unforced system."""
    return kinetic_energy(state, params) + potential_energy(state, params)


def _raw_accelerations(c1, s1, c2, s2, w1, w2, u1, p: PendubotParams):
    k1, k2, _, al, be, g1, g2, sc = _raw_coefficients(c1, s1, c2, s2, w2, p)
    if not sc > 0.0:
        raise DegenerateInertiaError(f"elbow Schur inertia {sc:.3e} <= 0")
    quad = be * (w1 * w1 + w1 * w2)
    a2 = (-(k2 / (2.0 * k1)) * (u1 - g1 - al * (2.0 * w1 + w2))
          - al * w1 + quad - g2) / sc
    a1 = (u1 - g1 - k2 * a2 - al * (2.0 * w1 + w2)) / (2.0 * k1)
    return a1, a2


def accelerations(state: PendubotState, u1: float,
                  params: PendubotParams) -> tuple[float, float]:
    """Body angular accelerations ``(w1dot, w2dot)`` under shoulder torque u1.

    Solves the two coupled equations of motion: the elbow rate follows from
    the Schur-complement reduction,

        schur * w2dot = -(K2 / 2K1) (u1 - Gamma1 - alpha (2w1 + w2))
                        - alpha w1 + beta (w1^2 + w1 w2) - Gamma2,

    and the shoulder rate by back-substitution,

        2 K1 w1dot = u1 - Gamma1 - K2 w2dot - alpha (2w1 + w2).
    """
    r1, r2 = state.r1, state.r2
    return _raw_accelerations(r1[0, 0], r1[1, 0], r2[0, 0], r2[1, 0],
                              state.w1, state.w2, float(u1), params)
