"""Shared fixtures and finite-difference oracles."""

import numpy as np
import pytest

from flagsim.config import RunConfig
from flagsim.elastic import (MaterialParams, bend_twist_gradients,
                             elastic_energy_value, scatter_vector,
                             stiffness_tables, stretch_terms)
from flagsim.rod import (RobotGeometry, build_robot, compute_ref_twist,
                         parallel_transport, update_frames)

RPM = 2.0 * np.pi / 60.0


@pytest.fixture(scope="session")
def material():
    return MaterialParams.isotropic_rod(E=1.2e6, nu=0.5, r0=3.2e-3,
                                        density=1000.0)


@pytest.fixture()
def small_robot():
    """A coarse 2-flagella robot, cheap enough for dense finite differences."""
    geom = RobotGeometry(R_h=0.02, L_p=0.04, n=2, L=0.03, edge_len=6e-3)
    return build_robot(geom)


def perturbed_state(topology, state, rest, rng, pos_scale=0.05,
                    theta_scale=0.2):
    """Random but geometrically consistent state near the built shape."""
    out = state.copy()
    scale = pos_scale * rest.rest_edge_len.min()
    out.q = out.q.copy()
    out.q[:3 * topology.n_nodes] += scale * rng.standard_normal(
        3 * topology.n_nodes)
    out.q[3 * topology.n_nodes:] += theta_scale * rng.standard_normal(
        topology.n_edges)
    return update_frames(topology, out)


def frames_at(topology, base_state, q):
    """Reference frames and twists at configuration q, transported from
    the committed frames of ``base_state`` (the stepper's evaluation path)."""
    n = topology.n_nodes
    x = q[:3 * n].reshape(n, 3)
    e = x[topology.edges[:, 1]] - x[topology.edges[:, 0]]
    t_new = e / np.linalg.norm(e, axis=1, keepdims=True)
    d1 = parallel_transport(base_state.d1, base_state.tangent, t_new)
    d1 -= np.sum(d1 * t_new, axis=1, keepdims=True) * t_new
    d1 /= np.linalg.norm(d1, axis=1, keepdims=True)
    d2 = np.cross(t_new, d1)
    ref_twist = compute_ref_twist(topology, d1, t_new, base_state.ref_twist)
    return x, d1, d2, ref_twist


def energy_at(topology, rest, mat, base_state, q):
    x, d1, d2, ref_twist = frames_at(topology, base_state, q)
    return elastic_energy_value(topology, rest, mat, x, q[3 * topology.n_nodes:],
                                d1, d2, ref_twist)


def gradient_at(topology, rest, mat, base_state, q):
    x, d1, d2, ref_twist = frames_at(topology, base_state, q)
    theta = q[3 * topology.n_nodes:]
    ea_e, ei_s, gj_s = stiffness_tables(topology, mat)
    _, gs, _, idx_s = stretch_terms(topology, rest, ea_e, x)
    _, _, gb, gt, idx_bt, _ = bend_twist_gradients(
        topology, rest, ei_s, gj_s, x, theta, d1, d2, ref_twist)
    g = scatter_vector(topology.n_dof, idx_s, gs)
    g += scatter_vector(topology.n_dof, idx_bt, gb + gt)
    return g


def fd_gradient(topology, rest, mat, state, h=1e-7):
    g = np.zeros(topology.n_dof)
    for j in range(topology.n_dof):
        qp = state.q.copy()
        qm = state.q.copy()
        qp[j] += h
        qm[j] -= h
        g[j] = (energy_at(topology, rest, mat, state, qp)
                - energy_at(topology, rest, mat, state, qm)) / (2 * h)
    return g


def fd_hessian(topology, rest, mat, state, h=1e-6):
    H = np.zeros((topology.n_dof, topology.n_dof))
    for j in range(topology.n_dof):
        qp = state.q.copy()
        qm = state.q.copy()
        qp[j] += h
        qm[j] -= h
        H[:, j] = (gradient_at(topology, rest, mat, state, qp)
                   - gradient_at(topology, rest, mat, state, qm)) / (2 * h)
    # the raw finite-difference Jacobian of the force picks up an
    # antisymmetric gauge term from the frame-transport baseline; the
    # energy Hessian is its symmetric part
    return 0.5 * (H + H.T)


@pytest.fixture(scope="session")
def design1():
    return RunConfig.from_design(1, n=2)


@pytest.fixture(scope="session")
def design2():
    return RunConfig.from_design(2, n=2)
