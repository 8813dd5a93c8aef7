"""Granular drag model: coefficients, node forces, head drag, Jacobian."""

import numpy as np
import pytest

from flagsim.media import (MediumParams, RFTEnvironment, drag_coefficients,
                           external_force_jacobian, head_drag, head_torque,
                           rft_node_force)
from flagsim.rod import build_chain


def med_design1():
    return MediumParams.from_friction(mu=6.828, C1=2.420, C2=0.039,
                                      R_h=0.02, R_d=0.02, L=0.111, r0=3.2e-3)


def test_drag_coefficients_design1():
    # ln(2*0.111/0.0032) = ln(69.375) = 4.2395
    eta_t, eta_p = drag_coefficients(6.828, 0.111, 3.2e-3)
    assert np.isclose(eta_t, 2 * np.pi * 6.828 / (np.log(69.375) - 0.5))
    assert np.isclose(eta_t, 11.4725, rtol=1e-4)
    assert np.isclose(eta_p, 18.1037, rtol=1e-4)


def test_drag_coefficients_design2():
    # ln(2*0.089/0.0032) = ln(55.625) = 4.0187
    _, eta_p = drag_coefficients(2.125, 0.089, 3.2e-3)
    assert np.isclose(eta_p, 5.9096, rtol=1e-3)


def test_drag_ratio_limit():
    ratios = [drag_coefficients(1.0, L, 1e-3)[1]
              / drag_coefficients(1.0, L, 1e-3)[0] for L in (0.1, 10.0, 1e4)]
    assert ratios[0] < ratios[1] < ratios[2] < 2.0
    assert np.isclose(ratios[2], 2.0, atol=0.25)


def test_drag_coefficients_reject_stubby():
    with pytest.raises(ValueError):
        drag_coefficients(1.0, 0.8e-3, 1e-3)    # log(2L/r0) = log(1.6) < 1/2
    with pytest.raises(ValueError):
        drag_coefficients(-1.0, 0.1, 1e-3)


def test_medium_invariants():
    med = med_design1()
    assert med.eta_p > med.eta_t > 0
    with pytest.raises(ValueError):
        MediumParams(mu=1.0, eta_t=2.0, eta_p=1.0, C1=1.0, C2=1.0,
                     R_h=0.02, R_d=0.02)
    with pytest.raises(ValueError):
        MediumParams(mu=-1.0, eta_t=1.0, eta_p=2.0, C1=1.0, C2=1.0,
                     R_h=0.02, R_d=0.02)


def test_rft_node_force_cases():
    med = med_design1()
    t = np.array([0.0, 1.0, 0.0])
    assert np.allclose(rft_node_force(np.zeros(3), t, 1.0, med), 0.0)

    f_par = rft_node_force(t, t, 1.0, med)
    assert np.allclose(f_par, -med.eta_t * t)

    v45 = np.array([np.sqrt(0.5), np.sqrt(0.5), 0.0])
    f = rft_node_force(v45, t, 2.0, med)
    expected = 2.0 * np.sqrt(med.eta_t ** 2 + med.eta_p ** 2) / np.sqrt(2.0)
    assert np.isclose(np.linalg.norm(f), expected)


def test_rft_exact_coefficients_and_dissipativity():
    med = med_design1()
    rng = np.random.default_rng(2)
    t = np.array([0.0, 0.0, 1.0])
    v_perp = np.array([0.3, -0.1, 0.0])
    f = rft_node_force(v_perp, t, 0.7, med)
    assert np.isclose(np.linalg.norm(f) / (0.7 * np.linalg.norm(v_perp)),
                      med.eta_p)
    for _ in range(50):
        v = rng.standard_normal(3)
        tt = rng.standard_normal(3)
        tt /= np.linalg.norm(tt)
        f = rft_node_force(v, tt, rng.uniform(0.1, 2.0), med)
        assert f @ v <= 1e-15


def test_rft_frame_covariance():
    med = med_design1()
    rng = np.random.default_rng(4)
    v = rng.standard_normal(3)
    t = rng.standard_normal(3)
    t /= np.linalg.norm(t)
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    phi = 0.9
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    R = np.eye(3) + np.sin(phi) * K + (1 - np.cos(phi)) * K @ K
    f = rft_node_force(v, t, 1.3, med)
    f_rot = rft_node_force(R @ v, R @ t, 1.3, med)
    assert np.allclose(f_rot, R @ f, atol=1e-12)


def test_head_drag_and_torque_values():
    med = med_design1()
    assert np.allclose(head_drag(np.zeros(3), med), 0.0)
    f = head_drag(np.array([0.0, -1e-3, 0.0]), med)
    assert np.allclose(f, [0.0, 2.420 * 6 * np.pi * 6.828 * 0.02 * 1e-3, 0.0])
    assert np.isclose(f[1], 6.229e-3, rtol=1e-3)

    med2 = MediumParams(mu=med.mu, eta_t=med.eta_t, eta_p=med.eta_p,
                        C1=2 * med.C1, C2=med.C2, R_h=med.R_h, R_d=med.R_d)
    assert np.allclose(head_drag(np.array([0.0, -1e-3, 0.0]), med2), 2 * f)

    assert head_torque(0.0, med) == 0.0
    T = head_torque(10.0, med)
    assert np.isclose(abs(T), 5.354e-4, rtol=1e-3)
    assert T < 0 and head_torque(-10.0, med) > 0


def test_external_force_jacobian_blocks():
    med = med_design1()
    topo, state, rest = build_chain(0.111, 27, direction=(0, 1, 0))
    dt = 1e-2
    J = external_force_jacobian(topo, rest, state, dt, med).toarray()
    t = np.array([0.0, 1.0, 0.0])
    proj = med.eta_t * np.outer(t, t) + med.eta_p * (np.eye(3) - np.outer(t, t))
    for node in (3, 10):
        blk = J[3 * node: 3 * node + 3, 3 * node: 3 * node + 3]
        expect = -rest.node_drag_len[node] / dt * proj
        assert np.allclose(blk, expect)
        assert np.isclose(np.trace(blk),
                          -rest.node_drag_len[node] / dt
                          * (med.eta_t + 2 * med.eta_p))
    # velocity term vanishes as dt grows
    J_slow = external_force_jacobian(topo, rest, state, 1e9, med).toarray()
    assert np.abs(J_slow).max() < 1e-6


def test_environment_force_matches_jacobian_at_lag_point():
    med = med_design1()
    topo, state, rest = build_chain(0.05, 8, direction=(0, 1, 0))
    env = RFTEnvironment(med)
    dt = 1e-2
    q0 = state.q.copy()
    rows, cols, vals = env.jacobian_triplets(topo, rest, q0, dt)
    J = np.zeros((topo.n_dof, topo.n_dof))
    np.add.at(J, (rows, cols), vals)
    rng = np.random.default_rng(9)
    h = 1e-8
    for _ in range(4):
        j = rng.integers(0, 3 * topo.n_nodes)
        qp = q0.copy()
        qp[j] += h
        qm = q0.copy()
        qm[j] -= h
        col = (env.forces(topo, rest, qp, q0, dt)
               - env.forces(topo, rest, qm, q0, dt)) / (2 * h)
        assert np.allclose(col, J[:, j], atol=1e-6 * max(1.0, np.abs(J).max()))
