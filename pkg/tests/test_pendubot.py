import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agat import so2
from agat.acceptance import lagrangian_oracle_accelerations
from agat.pendubot import (DegenerateInertiaError, PendubotParams,
                           PendubotState, accelerations, coefficients,
                           kinetic_energy, potential_energy, total_energy)

SIM1_RODS = PendubotParams.uniform_rods(0.25, 0.2, 0.5, 0.5)

angles = st.floats(-math.pi, math.pi)
rates = st.floats(-5.0, 5.0)


# --- parameters and state ----------------------------------------------------

def test_uniform_rod_inertias():
    assert SIM1_RODS.i1 == pytest.approx(0.0208333, abs=1e-7)
    assert SIM1_RODS.i2 == pytest.approx(0.0166667, abs=1e-7)


@pytest.mark.parametrize("field", ["m1", "m2", "l1", "l2", "i1", "i2"])
def test_positive_parameters_enforced(field):
    kwargs = dict(m1=1.0, m2=1.0, l1=1.0, l2=1.0, i1=0.3, i2=0.3, g=9.8)
    kwargs[field] = 0.0
    with pytest.raises(ValueError):
        PendubotParams(**kwargs)


def test_link_vectors_read_only():
    assert np.array_equal(SIM1_RODS.L1, [0.0, 0.5])
    assert np.array_equal(SIM1_RODS.L2, [0.0, 0.5])
    with pytest.raises(ValueError):
        SIM1_RODS.L1[1] = 2.0


def test_state_rejects_non_rotation():
    with pytest.raises(ValueError):
        PendubotState(np.eye(2) * 1.01, np.eye(2), 0.0, 0.0)


def test_state_matrices_frozen():
    s = PendubotState.from_angles(0.3, -0.2, 0.0, 0.0)
    with pytest.raises(ValueError):
        s.r1[0, 0] = 5.0


# --- coefficient functions ---------------------------------------------------

def test_coefficients_at_elbow_identity():
    state = PendubotState.from_angles(0.0, 0.0, 0.0, 0.0)
    c = coefficients(state, SIM1_RODS)
    # L1'L2 = 0.25 so the coupling adds m2 * 0.25 = 0.05
    assert c.k1 == pytest.approx(SIM1_RODS.i1 + SIM1_RODS.i2 + 0.05 + 0.05)
    assert c.k2 == pytest.approx(2.0 * SIM1_RODS.i2 + 0.05)
    assert c.k3 == SIM1_RODS.i2
    assert c.alpha == 0.0  # linear in w2
    assert c.gamma1 == 0.0 and c.gamma2 == 0.0  # gravity balanced at cosines' peak


def test_alpha_quarter_turn_value():
    state = PendubotState(so2.identity(), so2.exp_so2(math.pi / 2), 0.0, 1.0)
    assert coefficients(state, SIM1_RODS).alpha == pytest.approx(-0.05)


@settings(max_examples=150)
@given(angles, angles, rates)
def test_alpha_is_k1_rate_of_change(th1, th2, w2):
    # finite-difference d/dt K1 along Rdot2 = R2 hat(w2)
    h = 1e-6
    c = coefficients(PendubotState.from_angles(th1, th2, 0.0, w2), SIM1_RODS)
    kp = coefficients(PendubotState.from_angles(th1, th2 + h * w2, 0.0, w2),
                      SIM1_RODS)
    km = coefficients(PendubotState.from_angles(th1, th2 - h * w2, 0.0, w2),
                      SIM1_RODS)
    assert c.alpha == pytest.approx((kp.k1 - km.k1) / (2.0 * h), abs=1e-6)


def test_coefficients_match_matrix_expressions():
    """The scalar coefficient code equals the geometric matrix formulas."""
    p = SIM1_RODS
    e1 = np.array([1.0, 0.0])
    rng = np.random.default_rng(11)
    for _ in range(200):
        th1, th2 = rng.uniform(-math.pi, math.pi, 2)
        w2 = rng.uniform(-5, 5)
        r1, r2 = so2.exp_so2(th1), so2.exp_so2(th2)
        c = coefficients(PendubotState(r1, r2, 0.0, w2), p)
        outer = np.outer(p.L1, p.L2)
        ag = (0.5 * p.m1 + p.m2) * p.g * p.l1
        bg = 0.5 * p.m2 * p.g * p.l2
        assert c.k1 == pytest.approx(
            p.i1 + p.i2 + p.m2 * p.l1 ** 2 + p.m2 * p.L1 @ r2 @ p.L2, abs=1e-14)
        assert c.alpha == pytest.approx(
            p.m2 * np.sum(outer * (r2 @ so2.hat(w2))), abs=1e-14)
        assert c.beta == pytest.approx(
            -2.0 * p.m2 * so2.vee(so2.skew(r2 @ outer)), abs=1e-14)
        assert c.gamma1 == pytest.approx(
            -2.0 * (ag * so2.vee(so2.skew(r1 @ np.outer(e1, e1)))
                    + bg * so2.vee(so2.skew(r1 @ r2 @ np.outer(e1, e1)))),
            abs=1e-13)
        assert c.gamma2 == pytest.approx(
            -2.0 * bg * so2.vee(so2.skew(r2 @ np.outer(e1, e1) @ r1)),
            abs=1e-13)


def test_degenerate_inertia_detected():
    p = PendubotParams(1.0, 1.0, 1.0, 1.0, 0.33, 1e-12)
    with pytest.raises(DegenerateInertiaError):
        coefficients(PendubotState.from_angles(0.0, 0.0, 0.0, 0.0), p)


@settings(max_examples=300)
@given(angles)
def test_mass_matrix_positive_definite(th2):
    c = coefficients(PendubotState.from_angles(0.0, th2, 0.0, 0.0), SIM1_RODS)
    m = np.array([[2.0 * c.k1, c.k2], [c.k2, 2.0 * c.k3]])
    assert np.all(np.linalg.eigvalsh(m) > 0.0)
    assert c.schur > 0.0


# --- energies ----------------------------------------------------------------

def _rod_quadrature_energy(state, p, n=4000):
    """Independent check: integrate ||xdot||^2 over both uniform rods."""
    th1 = so2.log_so2(state.r1)
    r1, r2 = state.r1, state.r2
    d_r1 = r1 @ so2.hat(state.w1)
    d_r12 = d_r1 @ r2 + r1 @ r2 @ so2.hat(state.w2)
    s = np.linspace(0.0, 1.0, n, endpoint=False) + 0.5 / n
    total = 0.0
    pts = np.outer(s * p.l1, [0.0, 1.0])
    vel = pts @ d_r1.T
    total += np.sum(np.sum(vel * vel, axis=1)) * (p.m1 / n)
    pts = np.outer(s * p.l2, [0.0, 1.0])
    vel = pts @ d_r12.T + d_r1 @ p.L1
    total += np.sum(np.sum(vel * vel, axis=1)) * (p.m2 / n)
    return total


def test_kinetic_energy_against_quadrature():
    cases = [
        (0.0, 0.0, 1.0, 0.0),
        (0.3, -1.2, 0.7, 1.9),
        (-2.0, 2.6, -1.1, 0.4),
    ]
    for th1, th2, w1, w2 in cases:
        state = PendubotState.from_angles(th1, th2, w1, w2)
        k = kinetic_energy(state, SIM1_RODS)
        assert k == pytest.approx(_rod_quadrature_energy(state, SIM1_RODS),
                                  rel=1e-6)


def test_kinetic_energy_single_rates():
    state = PendubotState.from_angles(0.1, 0.4, 0.0, 0.0)
    assert kinetic_energy(state, SIM1_RODS) == 0.0
    state = PendubotState.from_angles(0.1, 0.4, 0.0, 1.0)
    assert kinetic_energy(state, SIM1_RODS) == pytest.approx(SIM1_RODS.i2)


def test_potential_energy_values():
    state = PendubotState.from_angles(0.0, 0.0, 0.0, 0.0)
    expected = (0.25 / 2 + 0.2) * 9.8 * 0.5 + 0.1 * 9.8 * 0.5
    assert potential_energy(state, SIM1_RODS) == pytest.approx(expected)
    zero_g = PendubotParams(0.25, 0.2, 0.5, 0.5, 0.02, 0.016, g=0.0)
    assert potential_energy(state, zero_g) == 0.0


def test_potential_energy_sign_flip_under_half_turn():
    up = PendubotState.from_angles(0.0, 0.0, 0.0, 0.0)
    down = PendubotState.from_angles(math.pi, 0.0, 0.0, 0.0)
    assert potential_energy(down, SIM1_RODS) == pytest.approx(
        -potential_energy(up, SIM1_RODS))


# --- accelerations -----------------------------------------------------------

def test_force_free_equilibrium():
    p = PendubotParams(0.25, 0.2, 0.5, 0.5, 0.02, 0.016, g=0.0)
    state = PendubotState.from_angles(0.7, -0.3, 0.0, 0.0)
    assert accelerations(state, 0.0, p) == (0.0, 0.0)


def test_accelerations_match_independent_oracle():
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(1000):
        th1, th2 = rng.uniform(-math.pi, math.pi, 2)
        w1, w2 = rng.uniform(-5, 5, 2)
        u1 = rng.uniform(-3, 3)
        got = np.array(accelerations(
            PendubotState.from_angles(th1, th2, w1, w2), u1, SIM1_RODS))
        want = lagrangian_oracle_accelerations(th1, th2, w1, w2, u1, SIM1_RODS)
        worst = max(worst, float(np.max(np.abs(got - want))))
    assert worst < 1e-8


def test_acceleration_linear_in_torque():
    state = PendubotState.from_angles(0.4, 1.1, -0.5, 0.8)
    c = coefficients(state, SIM1_RODS)
    a0 = accelerations(state, 0.0, SIM1_RODS)
    a1 = accelerations(state, 1.0, SIM1_RODS)
    a3 = accelerations(state, 3.0, SIM1_RODS)
    slope_w1 = (1.0 + c.k2 ** 2 / (2.0 * c.k1 * c.schur)) / (2.0 * c.k1)
    assert a1[0] - a0[0] == pytest.approx(slope_w1, rel=1e-12)
    assert a3[0] - a0[0] == pytest.approx(3.0 * slope_w1, rel=1e-12)
    assert a3[1] - a0[1] == pytest.approx(3.0 * (a1[1] - a0[1]), rel=1e-12)


def test_total_energy_is_sum():
    state = PendubotState.from_angles(0.2, -0.9, 1.0, -2.0)
    assert total_energy(state, SIM1_RODS) == pytest.approx(
        kinetic_energy(state, SIM1_RODS) + potential_energy(state, SIM1_RODS))
