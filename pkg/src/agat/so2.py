"""Arithmetic on the planar rotation group and its Lie algebra.

Rotations are plain 2x2 arrays of the form ``[[c, -s], [s, c]]``; algebra
elements are real scalars ``w`` identified with the skew matrix
``hat(w) = [[0, -w], [w, 0]]``, so ``Rdot = R @ hat(w)`` integrates a body
rate ``w``.

The group is abelian.  Brackets, coadjoint terms and the Lie-algebra
connection therefore all vanish, but the helpers below still evaluate
their defining expressions instead of returning literal zeros, so that
control laws written for a general matrix group specialize here term by
term.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "identity",
    "hat",
    "vee",
    "skew",
    "commutator",
    "exp_so2",
    "log_so2",
    "ad_star",
    "connection_term",
    "project_rotation",
    "orthogonality_defect",
    "is_rotation",
]


def identity() -> np.ndarray:
    """The identity rotation."""
    return np.eye(2)


def hat(w: float) -> np.ndarray:
    """Skew matrix ``[[0, -w], [w, 0]]`` of a scalar."""
    return np.array([[0.0, -w], [w, 0.0]])


def skew(a: np.ndarray) -> np.ndarray:
    """Skew-symmetric part ``(a - a.T) / 2``."""
    return 0.5 * (a - a.T)

def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix commutator ``a @ b - b @ a``."""
    return a @ b - b @ a


def vee(a: np.ndarray) -> float:
    """Scalar of the skew part of a 2x2 matrix; inverse of ``hat`` on skews.

    A non-skew argument is projected first, so ``vee(a) = (a21 - a12) / 2``.
    This is the unique linear extension consistent with the trace pairing
    ``<A, B> = tr(A.T B)``.
    """
    return 0.5 * (a[1, 0] - a[0, 1])


def exp_so2(w: float) -> np.ndarray:
    """Group exponential: the rotation by angle ``w``."""
    c, s = math.cos(w), math.sin(w)
    return np.array([[c, -s], [s, c]])


def log_so2(r: np.ndarray) -> float:
    """Rotation angle in ``(-pi, pi]``."""
    angle = math.atan2(r[1, 0], r[0, 0])
    if angle == -math.pi:
        return math.pi
    return angle


def ad_star(xi: float, mu: float) -> float:
    """Coadjoint action of ``xi`` on ``mu``.

    Defined through the pairing with the bracket; on an abelian algebra the
    bracket vanishes identically, and so does this.
    """
    return vee(commutator(hat(xi), hat(mu)))


def connection_term(xi: float, nu: float, inertia: float) -> float:
    """Bilinear connection of a left-invariant metric, evaluated on scalars.

    Half the bracket minus the inertia-weighted coadjoint symmetrization.
    Both contributions vanish on an abelian algebra; the expression is kept
    so that chain-rule style torque formulas can call it where a general
    group would need it.
    """
    if inertia <= 0.0:
        raise ValueError("inertia must be positive")
    bracket = 0.5 * vee(commutator(hat(xi), hat(nu)))
    coad = ad_star(xi, inertia * nu) + ad_star(nu, inertia * xi)
    return bracket - 0.5 * coad / inertia


def project_rotation(r: np.ndarray) -> np.ndarray:
    """Nearest rotation obtained by normalizing the first column.

    The second column is reconstructed as the positive quarter-turn of the
    first, so the result is orthogonal with unit determinant up to rounding.
    """
    n = math.hypot(r[0, 0], r[1, 0])
    if n == 0.0 or not math.isfinite(n):
        raise ValueError("cannot project a degenerate matrix onto SO(2)")
    c = r[0, 0] / n
    s = r[1, 0] / n
    return np.array([[c, -s], [s, c]])


def orthogonality_defect(r: np.ndarray) -> float:
    """Frobenius norm of ``r.T r - id``."""
    return float(np.linalg.norm(r.T @ r - np.eye(2)))


def is_rotation(r: np.ndarray, tol: float = 1e-12) -> bool:
    """Whether ``r`` is orthogonal with determinant one, within ``tol``."""
    if r.shape != (2, 2):
        return False
    if orthogonality_defect(r) > tol:
        return False
    return abs(r[0, 0] * r[1, 1] - r[0, 1] * r[1, 0] - 1.0) <= tol
