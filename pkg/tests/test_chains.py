import math

import numpy as np
import pytest

from agat import so2
from agat.chains import (ChainConfig, ChainState, DynamicsBlocks,
                         RankDeficiencyError, SingularMassMatrixError,
                         TorusNavigation, chain_accelerations, chain_blocks,
                         chain_dynamics, chain_tracking_torque,
                         coupling_rank_check, schur_inertia,
                         torque_from_blocks, torus_psi)
from agat.integrate import lie_rk4_step
from agat.pendubot import PendubotState, coefficients
from agat.scenarios import builtin_scenarios
from agat.tracking import GainSet, ReferenceTrajectory, psi

S1 = builtin_scenarios()["s1"]


def pendubot_chain(params):
    return ChainConfig((params.m1, params.m2), (params.l1, params.l2),
                       (params.i1, params.i2), params.g, actuated=(0,))


THREE = ChainConfig(masses=(0.3, 0.25, 0.2), lengths=(0.4, 0.35, 0.3),
                    inertias=(4 * 0.3 * 0.16, 4 * 0.25 * 0.1225, 4 * 0.2 * 0.09),
                    g=9.8, actuated=(0, 1))


def random_chain_state(rng, n=3, vmax=3.0):
    return ChainState.from_angles(rng.uniform(-math.pi, math.pi, n),
                                  rng.uniform(-vmax, vmax, n))


# --- configuration validation ------------------------------------------------

def test_partition_validation():
    with pytest.raises(ValueError):
        ChainConfig((1.0, 1.0), (1.0, 1.0), (0.4, 0.4), 9.8, actuated=(0, 1))
    with pytest.raises(ValueError):  # more passive than actuated
        ChainConfig((1.0,) * 3, (1.0,) * 3, (0.4,) * 3, 9.8, actuated=(0,))
    with pytest.raises(ValueError):
        ChainConfig((1.0, 1.0), (1.0, 1.0), (0.4, 0.4), 9.8, actuated=(2,))
    cfg = ChainConfig((1.0,) * 3, (1.0,) * 3, (0.4,) * 3, 9.8, actuated=(0, 2))
    assert cfg.passive == (1,)


# --- the two-link chain reproduces the pendubot ------------------------------

def test_blocks_match_pendubot_coefficients():
    config = pendubot_chain(S1.params)
    rng = np.random.default_rng(17)
    for _ in range(300):
        th1, th2 = rng.uniform(-math.pi, math.pi, 2)
        w1, w2 = rng.uniform(-5, 5, 2)
        state = ChainState.from_angles((th1, th2), (w1, w2))
        blocks = chain_blocks(state, config)
        c = coefficients(PendubotState.from_angles(th1, th2, w1, w2), S1.params)
        assert blocks.m11[0, 0] == pytest.approx(2.0 * c.k1, abs=1e-12)
        assert blocks.m12[0, 0] == pytest.approx(c.k2, abs=1e-12)
        assert blocks.m21[0, 0] == pytest.approx(c.k2, abs=1e-12)
        assert blocks.m22[0, 0] == pytest.approx(2.0 * c.k3, abs=1e-12)
        assert blocks.h1[0] == pytest.approx(c.alpha * (2 * w1 + w2), abs=1e-12)
        assert blocks.h2[0] == pytest.approx(
            c.alpha * w1 - c.beta * (w1 * w1 + w1 * w2), abs=1e-12)
        assert blocks.phi1[0] == pytest.approx(c.gamma1, abs=1e-12)
        assert blocks.phi2[0] == pytest.approx(c.gamma2, abs=1e-12)
        assert schur_inertia(blocks)[0, 0] == pytest.approx(c.schur, abs=1e-12)


def test_rest_state_has_no_rate_terms():
    state = ChainState.from_angles((0.3, -0.7, 1.2), (0.0, 0.0, 0.0))
    blocks = chain_blocks(state, THREE)
    assert np.all(blocks.h1 == 0.0) and np.all(blocks.h2 == 0.0)


def test_zero_gravity_kills_gravity_vectors():
    config = ChainConfig(THREE.masses, THREE.lengths, THREE.inertias, 0.0,
                         actuated=(0, 1))
    state = ChainState.from_angles((0.3, -0.7, 1.2), (1.0, -2.0, 0.5))
    blocks = chain_blocks(state, config)
    assert np.all(blocks.phi1 == 0.0) and np.all(blocks.phi2 == 0.0)


# --- mass matrix structure ----------------------------------------------------

def test_full_mass_matrix_spd_random_states():
    rng = np.random.default_rng(71)
    for _ in range(1000):
        state = random_chain_state(rng)
        m, _, _ = chain_dynamics(state, THREE)
        assert np.max(np.abs(m - m.T)) < 1e-14
        assert np.all(np.linalg.eigvalsh(m) > 0.0)


def test_schur_inertia_spd_and_blockdiag_case():
    rng = np.random.default_rng(72)
    for _ in range(200):
        blocks = chain_blocks(random_chain_state(rng), THREE)
        isch = schur_inertia(blocks)
        assert np.all(np.linalg.eigvalsh(isch) > 0.0)
    # decoupled blocks: the passive block passes through untouched
    blocks = DynamicsBlocks(np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)),
                            np.array([[0.7]]), np.zeros(2), np.zeros(1),
                            np.zeros(2), np.zeros(1))
    assert schur_inertia(blocks)[0, 0] == 0.7


def test_schur_inertia_singular_m11():
    blocks = DynamicsBlocks(np.zeros((2, 2)), np.zeros((2, 1)),
                            np.zeros((1, 2)), np.eye(1), np.zeros(2),
                            np.zeros(1), np.zeros(2), np.zeros(1))
    with pytest.raises(SingularMassMatrixError):
        schur_inertia(blocks)


def test_chain_rate_terms_match_energy_gradient():
    """h must be consistent with the mass matrix: rate-only energy balance."""
    rng = np.random.default_rng(73)
    for _ in range(100):
        state = random_chain_state(rng)
        m, h, _ = chain_dynamics(state, THREE)
        v = state.rates
        # d/dt (1/2 v' M v) along unforced, zero-gravity flow must vanish:
        # v' M vdot + 1/2 v' Mdot v with M vdot = -h  =>  1/2 v' Mdot v = v' h
        eps = 1e-6
        shifted = ChainState.from_angles(
            [so2.log_so2(r) + eps * w for r, w in
             zip(state.rotations, state.rates)], state.rates)
        m2, _, _ = chain_dynamics(shifted, THREE)
        mdot = (m2 - m) / eps
        assert 0.5 * v @ mdot @ v == pytest.approx(v @ h, abs=1e-4)


# --- rank condition -----------------------------------------------------------

def test_coupling_rank_examples():
    blocks = chain_blocks(ChainState.from_angles((0.2, 0.5), (0.0, 0.0)),
                          pendubot_chain(S1.params))
    assert coupling_rank_check(blocks, 1)

    broken = DynamicsBlocks(np.eye(2), np.zeros((2, 1)),
                            np.zeros((1, 2)), np.eye(1), np.zeros(2),
                            np.zeros(1), np.zeros(2), np.zeros(1))
    assert not coupling_rank_check(broken, 1)

    wide = DynamicsBlocks(np.eye(2), np.zeros((2, 1)),
                          np.array([[0.0, 0.3]]), np.eye(1), np.zeros(2),
                          np.zeros(1), np.zeros(2), np.zeros(1))
    assert coupling_rank_check(wide, 1)


def test_near_rank_deficient_physical_configuration():
    """A real chain configuration can lose the coupling: small wrist inertia
    with the last joint folded makes the coupling row numerically zero."""
    m3, l2, l3 = 0.2, 0.35, 0.3
    cfg = ChainConfig((0.3, 0.25, m3), (0.4, l2, l3),
                      (0.12, 0.104, 0.5 * m3 * l2 * l3), 9.8, actuated=(0, 1))
    th3 = math.pi                      # folds the last joint: 2 i3 = m3 l2 l3
    th2 = math.pi / 2 - th3            # kills the remaining coupling entry
    state = ChainState.from_angles((0.4, th2, th3), (0.0, 0.0, 0.0))
    blocks = chain_blocks(state, cfg)
    assert not coupling_rank_check(blocks, 1)
    with pytest.raises(RankDeficiencyError):
        torque_from_blocks(blocks, np.zeros(1), np.zeros(1))


# --- torus navigation ----------------------------------------------------------

def test_torus_psi_values():
    nav = TorusNavigation((np.diag([1.0, 1.0]), np.diag([1.0, 1.0])))
    assert torus_psi((so2.identity(), so2.identity()), nav) == 0.0
    assert torus_psi((so2.identity(), -so2.identity()), nav) == pytest.approx(4.0)
    single = TorusNavigation((S1.gains.p,))
    e = so2.exp_so2(0.83)
    assert torus_psi((e,), single) == pytest.approx(psi(e, S1.gains.p))


# --- the chain torque law -------------------------------------------------------

def test_specializes_to_two_link_torque():
    from agat.tracking import tracking_torque
    config = pendubot_chain(S1.params)
    nav = TorusNavigation((S1.gains.p,))
    ref = S1.ref.build()
    rng = np.random.default_rng(303)
    for _ in range(300):
        th = rng.uniform(-math.pi, math.pi, 2)
        w = rng.uniform(-5, 5, 2)
        t = rng.uniform(0, 10)
        chain = ChainState.from_angles(th, w)
        state = PendubotState.from_angles(*th, *w)
        u_n = chain_tracking_torque(chain, (ref,), t, nav, S1.gains, config)
        u_2 = tracking_torque(state, ref, t, S1.gains, S1.params)
        assert u_n[0] == pytest.approx(u_2, abs=1e-9)


def test_rest_torque_compensates_gravity_exactly():
    nav = TorusNavigation((np.diag([1.0, 1.5]),))
    gains = GainSet.diagonal(2.3, (-1.5, -2.0), (1.0, 1.5))
    rng = np.random.default_rng(55)
    for _ in range(50):
        angles = rng.uniform(-math.pi, math.pi, 3)
        state = ChainState.from_angles(angles, np.zeros(3))
        j = THREE.passive[0]
        ref = ReferenceTrajectory.hold(so2.log_so2(state.rotations[j]))
        u1 = chain_tracking_torque(state, (ref,), 0.0, nav, gains, THREE)
        qdd = chain_accelerations(state, u1, THREE)
        assert abs(qdd[j]) < 1e-11  # passive joint holds still


def test_closed_loop_identity_three_link():
    from agat.tracking import stabilizing_force, ErrorState
    gains = GainSet.diagonal(2.3, (-1.5, -2.0), (1.0, 1.5))
    nav = TorusNavigation((gains.p,))
    ref = ReferenceTrajectory.constant_rate(1.0, 0.3)
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(500):
        state = random_chain_state(rng)
        t = rng.uniform(0, 10)
        u1 = chain_tracking_torque(state, (ref,), t, nav, gains, THREE)
        qdd = chain_accelerations(state, u1, THREE)
        blocks = chain_blocks(state, THREE)
        isch = schur_inertia(blocks)[0, 0]
        j = THREE.passive[0]
        e = ref.r_of_t(t) @ state.rotations[j].T
        force = stabilizing_force(ErrorState(e, ref.w_of_t(t) - state.rates[j]),
                                  gains)
        worst = max(worst, abs(isch * qdd[j] - (isch * 0.0 - force)
                               - isch * 0.0))
        # identity: Isch qdd2 = Isch wdot_ref - force, spin ref has wdot = 0
    assert worst < 1e-8


def test_free_chain_conserves_kinetic_energy():
    config = ChainConfig(THREE.masses, THREE.lengths, THREE.inertias, 0.0,
                         actuated=(0, 1))
    state = ChainState.from_angles((0.3, -0.7, 1.2), (1.0, -2.0, 0.5))

    def accel(rotations, rates, t):
        st = ChainState(tuple(rotations), rates)
        return chain_accelerations(st, np.zeros(2), config)

    def kinetic(st):
        m, _, _ = chain_dynamics(st, config)
        return 0.5 * st.rates @ m @ st.rates

    e0 = kinetic(state)
    rot, rates = list(state.rotations), state.rates
    for k in range(5000):
        rot, rates = lie_rk4_step(rot, rates, accel, k * 1e-3, 1e-3)
    drift = abs(kinetic(ChainState(tuple(rot), rates)) - e0) / e0
    assert drift < 1e-6


def test_three_link_tracking_converges():
    """Closed loop on the 3-link chain: the passive joint reaches its
    reference from a displaced start."""
    gains = GainSet.diagonal(2.3, (-1.5, -2.0), (1.0, 1.5))
    nav = TorusNavigation((gains.p,))
    ref = ReferenceTrajectory.constant_rate(1.0, 0.3)
    rng = np.random.default_rng(2024)
    state = ChainState.from_angles(rng.uniform(-math.pi, math.pi, 3),
                                   rng.uniform(-1.0, 1.0, 3))

    def accel(rotations, rates, t):
        st = ChainState(tuple(rotations), rates)
        u1 = chain_tracking_torque(st, (ref,), t, nav, gains, THREE)
        return chain_accelerations(st, u1, THREE)

    dt, t_end = 2e-3, 60.0
    rot, rates = list(state.rotations), state.rates
    j = THREE.passive[0]
    for k in range(int(round(t_end / dt))):
        rot, rates = lie_rk4_step(rot, rates, accel, k * dt, dt)
    e_final = ref.r_of_t(t_end) @ rot[j].T
    assert psi(e_final, gains.p) < 1e-3
