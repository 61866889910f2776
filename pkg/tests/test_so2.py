import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from agat import so2

angles = st.floats(-50.0, 50.0, allow_nan=False)


def test_hat_zero_and_unit():
    assert np.array_equal(so2.hat(0.0), np.zeros((2, 2)))
    assert np.array_equal(so2.hat(1.0), np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_hat_is_exactly_skew():
    m = so2.hat(2.5)
    assert np.array_equal(m, -m.T)


@given(angles)
def test_vee_hat_roundtrip(w):
    assert so2.vee(so2.hat(w)) == w


def test_vee_examples():
    assert so2.vee(np.array([[0.0, -1.0], [1.0, 0.0]])) == 1.0
    assert so2.vee(np.array([[1.0, 0.0], [0.0, 0.0]])) == 0.0
    # general matrix goes through its skew part
    assert so2.vee(np.array([[0.0, 0.0], [1.0, 0.0]])) == 0.5


def test_exp_basics():
    assert np.array_equal(so2.exp_so2(0.0), np.eye(2))
    quarter = so2.exp_so2(math.pi / 2)
    assert np.allclose(quarter, [[0.0, -1.0], [1.0, 0.0]], atol=1e-15)
    assert np.allclose(so2.exp_so2(0.3) @ so2.exp_so2(0.7), so2.exp_so2(1.0),
                       atol=1e-15)


def test_log_examples():
    assert so2.log_so2(np.eye(2)) == 0.0
    assert so2.log_so2(so2.exp_so2(math.pi / 2)) == pytest.approx(math.pi / 2)
    # the antipode maps to +pi, never -pi
    assert so2.log_so2(-np.eye(2)) == math.pi
    assert so2.log_so2(np.array([[-1.0, 0.0], [-0.0, -1.0]])) == math.pi


def test_exp_log_roundtrip_grid():
    grid = np.linspace(-math.pi + 1e-9, math.pi, 10_000)
    worst = max(abs(so2.log_so2(so2.exp_so2(a)) - a) for a in grid)
    assert worst < 1e-12


def test_group_commutes():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        a, b = rng.uniform(-10, 10, 2)
        left = so2.exp_so2(a) @ so2.exp_so2(b)
        right = so2.exp_so2(b) @ so2.exp_so2(a)
        assert np.max(np.abs(left - right)) < 1e-14


@given(angles, angles)
def test_conjugation_fixes_the_algebra(theta, w):
    # Ad_R hat(w) = R hat(w) R' = hat(w): rotations commute with skews
    r = so2.exp_so2(theta)
    assert np.allclose(r @ so2.hat(w) @ r.T, so2.hat(w), atol=1e-12)


@given(angles, angles)
def test_ad_star_vanishes(xi, mu):
    assert so2.ad_star(xi, mu) == 0.0


@pytest.mark.parametrize("xi,nu,inertia", [
    (1.0, 1.0, 0.05),
    (2.0, -3.0, 1.0),
    (0.0, 0.0, 1.0),
])
def test_connection_term_vanishes(xi, nu, inertia):
    assert so2.connection_term(xi, nu, inertia) == 0.0


def test_connection_term_rejects_bad_inertia():
    with pytest.raises(ValueError):
        so2.connection_term(1.0, 1.0, 0.0)


@given(angles, st.floats(0.5, 2.0), st.floats(-0.3, 0.3))
def test_projection_restores_invariants(theta, scale, shear):
    r = so2.exp_so2(theta) * scale
    r = r + shear * np.array([[0.0, 1.0], [0.0, 0.0]])
    proj = so2.project_rotation(r)
    assert so2.is_rotation(proj, tol=1e-14)


def test_projection_rejects_degenerate():
    with pytest.raises(ValueError):
        so2.project_rotation(np.zeros((2, 2)))


def test_is_rotation_tolerance():
    assert so2.is_rotation(np.eye(2))
    assert not so2.is_rotation(np.eye(2) * 1.001)
    # near-rotation within loose tolerance only
    off = so2.exp_so2(0.4) + 1e-10
    assert not so2.is_rotation(off, tol=1e-12)
    assert so2.is_rotation(off, tol=1e-8)
