"""Tracking control for an n-link planar chain with passive joints.

A serial chain of n links, each a rigid rod with center of mass at
mid-length and a free hinge-inertia parameter, m of whose joints are
torque-actuated and l = n - m passive (m >= l >= 1).  Generalized
coordinates are the *relative* joint rotations, matching the two-link
model in :mod:`agat.pendubot`: the n = 2 chain with the shoulder actuated
reproduces that model's coefficients exactly, block by block.

Dynamics are written in the partitioned form

    M11 qdd1 + M12 qdd2 + h1 + Phi1 = u1
    M21 qdd1 + M22 qdd2 + h2 + Phi2 = 0

(1 = actuated, 2 = passive; h quadratic-rate, Phi gravity).  Eliminating
the actuated accelerations leaves the passive block governed by the
Schur-complement inertia ``Isch = M22 - M21 M11^-1 M12``.

The torque law generalizes the pendubot controller joint-wise: a
navigation-function PD force on each passive joint's error, carried to the
actuated joints through the coupling block.  It requires *strong inertial
coupling*: M21 must have full column rank, so each passive joint is
reachable through the inertia matrix.  When m > l the coupling is
rectangular and the minimum-norm (pseudo-inverse) solution is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import so2
from .tracking import GainSet, ReferenceTrajectory, psi

__all__ = [
    "ChainConfig",
    "ChainState",
    "DynamicsBlocks",
    "TorusNavigation",
    "RankDeficiencyError",
    "SingularMassMatrixError",
    "chain_blocks",
    "chain_dynamics",
    "chain_accelerations",
    "schur_inertia",
    "coupling_rank_check",
    "torus_psi",
    "torque_from_blocks",
    "chain_tracking_torque",
]

_RANK_TOL = 1e-10


class RankDeficiencyError(RuntimeError):
    """M21 lost full column rank: strong inertial coupling is violated."""


class SingularMassMatrixError(RuntimeError):
    """The actuated mass block M11 is not invertible."""


@dataclass(frozen=True)
class ChainConfig:
    """Per-link physical data and the actuated/passive partition.

    ``actuated`` holds 0-based joint indices; the remaining joints are
    passive.  At least one joint must be passive and the actuated count
    must be at least the passive count.
    """

    masses: tuple
    lengths: tuple
    inertias: tuple
    g: float
    actuated: tuple

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        lengths = tuple(float(x) for x in self.lengths)
        inertias = tuple(float(i) for i in self.inertias)
        n = len(masses)
        if not (len(lengths) == n and len(inertias) == n and n >= 2):
            raise ValueError("need matching masses/lengths/inertias, n >= 2")
        if any(v <= 0.0 for v in masses + lengths + inertias):
            raise ValueError("masses, lengths and inertias must be positive")
        if self.g < 0.0:
            raise ValueError("g must be nonnegative")
        actuated = tuple(sorted(int(i) for i in self.actuated))
        if len(set(actuated)) != len(actuated) or \
                any(i < 0 or i >= n for i in actuated):
            raise ValueError("actuated indices must be distinct joints")
        passive = tuple(i for i in range(n) if i not in actuated)
        if not passive:
            raise ValueError("at least one joint must be passive")
        if len(actuated) < len(passive):
            raise ValueError("need at least as many actuated as passive joints")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "inertias", inertias)
        object.__setattr__(self, "g", float(self.g))
        object.__setattr__(self, "actuated", actuated)
        object.__setattr__(self, "passive", passive)

    passive: tuple = ()

    @property
    def n(self) -> int:
        return len(self.masses)


@dataclass(frozen=True)
class ChainState:
    """Relative joint rotations and joint rates."""

    rotations: tuple
    rates: np.ndarray

    def __post_init__(self):
        rot = tuple(np.asarray(r, dtype=float) for r in self.rotations)
        for r in rot:
            if not so2.is_rotation(r, tol=1e-9):
                raise ValueError("each configuration must be a rotation")
        rates = np.asarray(self.rates, dtype=float)
        if rates.shape != (len(rot),):
            raise ValueError("one rate per joint required")
        object.__setattr__(self, "rotations", rot)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def from_angles(cls, angles: Sequence[float],
                    rates: Sequence[float]) -> "ChainState":
        return cls(tuple(so2.exp_so2(a) for a in angles),
                   np.asarray(rates, dtype=float))


@dataclass(frozen=True)
class DynamicsBlocks:
    """Mass blocks, quadratic-rate vectors and gravity vectors, partitioned."""

    m11: np.ndarray
    m12: np.ndarray
    m21: np.ndarray
    m22: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray


def chain_dynamics(state: ChainState, config: ChainConfig):
    """Full (unpartitioned) mass matrix, quadratic-rate and gravity vectors.

    Assembled in absolute link angles, where mass entries are
    ``l_a l_b cos(phi_b - phi_a)`` weighted by the tail masses, then mapped
    to relative coordinates by the lower-triangular angle-summation
    matrix.  The mass matrix normalization matches the two-link model:
    twice the physical kinetic energy is ``qdot' M qdot / ... `` -- i.e.
    ``M`` is the Hessian of ``K = K1 w1^2 + K2 w1 w2 + ...`` at n = 2.
    """
    n = config.n
    m = np.asarray(config.masses)
    ln = np.asarray(config.lengths)
    inert = np.asarray(config.inertias)
    v = state.rates

    # cumulative (absolute) rotations and pairwise relative angles
    abs_rot = []
    acc = np.eye(2)
    for r in state.rotations:
        acc = acc @ r
        abs_rot.append(acc)
    tail = np.concatenate([np.cumsum(m[::-1])[::-1][1:], [0.0]])

    m_abs = np.zeros((n, n))
    grads = np.zeros((n, n, n))  # grads[d] = d(m_abs)/d(phi_d)
    for a in range(n):
        m_abs[a, a] = 2.0 * (inert[a] + ln[a] * ln[a] * tail[a])
        for b in range(a + 1, n):
            rel = abs_rot[a].T @ abs_rot[b]
            coef = ln[a] * ln[b] * (m[b] + 2.0 * tail[b])
            val = coef * rel[0, 0]
            dval = coef * rel[1, 0]  # d cos / d(phi_b - phi_a) = -sin
            m_abs[a, b] = m_abs[b, a] = val
            grads[b, a, b] = grads[b, b, a] = -dval
            grads[a, a, b] = grads[a, b, a] = dval

    phi_abs = np.array([
        -config.g * ln[a] * abs_rot[a][1, 0] * (0.5 * m[a] + tail[a])
        for a in range(n)
    ])

    t_map = np.tril(np.ones((n, n)))
    m_rel = t_map.T @ m_abs @ t_map
    phi_rel = t_map.T @ phi_abs

    # dM/d(theta_c) = T' (sum_{d >= c} grads[d]) T, then Christoffel contraction
    suffix = np.cumsum(grads[::-1], axis=0)[::-1]
    d_rel = np.einsum("ab,cbd,de->cae", t_map.T, suffix, t_map)
    h_rel = np.einsum("jki,i,j->k", d_rel, v, v) \
        - 0.5 * np.einsum("kij,i,j->k", d_rel, v, v)
    return m_rel, h_rel, phi_rel


def chain_blocks(state: ChainState, config: ChainConfig) -> DynamicsBlocks:
    """Partition the chain dynamics by the actuated/passive index sets."""
    m_rel, h_rel, phi_rel = chain_dynamics(state, config)
    ia = list(config.actuated)
    ip = list(config.passive)
    return DynamicsBlocks(
        m11=m_rel[np.ix_(ia, ia)], m12=m_rel[np.ix_(ia, ip)],
        m21=m_rel[np.ix_(ip, ia)], m22=m_rel[np.ix_(ip, ip)],
        h1=h_rel[ia], h2=h_rel[ip], phi1=phi_rel[ia], phi2=phi_rel[ip])


def chain_accelerations(state: ChainState, applied: np.ndarray,
                        config: ChainConfig) -> np.ndarray:
    """Joint accelerations under the given actuated torques."""
    m_rel, h_rel, phi_rel = chain_dynamics(state, config)
    tau = np.zeros(config.n)
    tau[list(config.actuated)] = np.asarray(applied, dtype=float)
    return np.linalg.solve(m_rel, tau - h_rel - phi_rel)


def schur_inertia(blocks: DynamicsBlocks) -> np.ndarray:
    """Effective passive-block inertia ``M22 - M21 M11^-1 M12``.

    Symmetric positive definite whenever the full mass matrix is; raises
    :class:`SingularMassMatrixError` if M11 cannot be inverted.
    """
    try:
        x = np.linalg.solve(blocks.m11, blocks.m12)
    except np.linalg.LinAlgError as exc:
        raise SingularMassMatrixError("M11 is singular") from exc
    isch = blocks.m22 - blocks.m21 @ x
    return 0.5 * (isch + isch.T)


def coupling_rank_check(blocks: DynamicsBlocks, l: int) -> bool:
    """Strong inertial coupling: does M21 have full column rank ``l``?

    Tested through singular values: the l-th largest must exceed ``1e-10``
    times the reference scale ``max(s_max(M21), |M22|)``.  The passive
    mass block sets an absolute scale so that a coupling which is nonzero
    only through rounding residue still counts as lost; a test relative to
    M21 alone would declare any nonzero single-row block full rank.
    """
    s = np.linalg.svd(blocks.m21, compute_uv=False)
    scale = max(float(s[0]) if s.size else 0.0,
                float(np.linalg.norm(blocks.m22, 2)))
    if s.size < l or scale == 0.0:
        return False
    return bool(s[l - 1] > _RANK_TOL * scale)


@dataclass(frozen=True)
class TorusNavigation:
    """Per-passive-joint diagonal weight matrices for the product potential."""

    weights: tuple

    def __post_init__(self):
        ws = tuple(np.asarray(w, dtype=float) for w in self.weights)
        for w in ws:
            if w.shape != (2, 2) or w[0, 1] != 0.0 or w[1, 0] != 0.0:
                raise ValueError("each weight must be a diagonal 2x2 matrix")
            if np.trace(w) == 0.0:
                raise ValueError("each weight must have nonzero trace")
        object.__setattr__(self, "weights", ws)


def torus_psi(errors: Sequence[np.ndarray], nav: TorusNavigation) -> float:
    """Sum of the per-joint navigation functions over the error torus.

    Minimum 0 uniquely at the all-identity error; the 2^l sign
    combinations of half-turns are the only other critical points.
    """
    if len(errors) != len(nav.weights):
        raise ValueError("one error rotation per weight required")
    return float(sum(psi(e, w) for e, w in zip(errors, nav.weights)))


def torque_from_blocks(blocks: DynamicsBlocks, u_stab: np.ndarray,
                       feedforward: np.ndarray) -> np.ndarray:
    """Actuated torques injecting ``u_stab`` into the passive error block.

    Solves ``M21 M11^-1 u1 = u_stab - feedforward - h2 - Phi2
    + M21 M11^-1 (h1 + Phi1)`` for the minimum-norm ``u1``.  Sign
    convention: substituting the result back into the passive equation
    yields ``Isch qdd2 = Isch wdot_ref - u_stab``, i.e. the error rate obeys
    ``Isch etadot = u_stab`` (the feedforward argument carries
    ``Isch (conn + wdot_ref)``).
    """
    l = blocks.m21.shape[0]
    if not coupling_rank_check(blocks, l):
        raise RankDeficiencyError(
            "M21 is column-rank deficient: passive joints are not reachable "
            "through the inertial coupling")
    try:
        lifted = np.linalg.solve(blocks.m11, blocks.h1 + blocks.phi1)
    except np.linalg.LinAlgError as exc:
        raise SingularMassMatrixError("M11 is singular") from exc
    w = (np.asarray(u_stab, dtype=float) - np.asarray(feedforward, dtype=float)
         - blocks.h2 - blocks.phi2 + blocks.m21 @ lifted)
    return blocks.m11 @ (np.linalg.pinv(blocks.m21) @ w)


def _stab_and_feedforward(state, refs, t, nav, gains, isch):
    ip = state_passive = None  # set by callers through closure arguments
    raise NotImplementedError


def chain_tracking_torque(state: ChainState,
                          refs: Sequence[ReferenceTrajectory], t: float,
                          nav: TorusNavigation, gains: GainSet,
                          config: ChainConfig) -> np.ndarray:
    """Actuated torques tracking one reference per passive joint.

    Joint-wise navigation PD forces (weights from ``nav``, proportional
    and dissipation gains shared from ``gains``) are injected through the
    coupling block; quadratic-rate and gravity terms are cancelled; the
    reference accelerations are fed forward through the Schur-complement
    inertia together with the (abelian, vanishing) connection term.

    At n = 2 with the first joint actuated this reduces term by term to
    :func:`agat.tracking.tracking_torque`.
    """
    ip = config.passive
    if len(refs) != len(ip):
        raise ValueError("one reference per passive joint required")
    if len(nav.weights) != len(ip):
        raise ValueError("one navigation weight per passive joint required")
    blocks = chain_blocks(state, config)
    isch = schur_inertia(blocks)
    fd_half = 0.5 * float(np.trace(gains.fd))

    u_stab = np.empty(len(ip))
    ff = np.empty(len(ip))
    for k, (j, ref) in enumerate(zip(ip, refs)):
        e = ref.r_of_t(t) @ state.rotations[j].T
        eta = ref.w_of_t(t) - state.rates[j]
        pd = -2.0 * gains.kp * so2.vee(so2.skew(nav.weights[k] @ e))
        u_stab[k] = pd + fd_half * eta
        ff[k] = ref.wdot_of_t(t) + so2.connection_term(eta, eta, isch[k, k])
    return torque_from_blocks(blocks, u_stab, isch @ ff)
