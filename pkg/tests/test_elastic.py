"""Elastic energies, forces and Hessians."""

import numpy as np
import pytest

from flagsim.elastic import (MaterialParams, axial_stretch, bending_energy,
                             material_curvatures, spring_strains,
                             stretching_energy, total_elastic, twisting_energy)
from flagsim.rod import (build_chain, curvature_binormal, rotate_state,
                         update_frames)

from conftest import energy_at, fd_gradient, fd_hessian, perturbed_state


def test_material_constants(material):
    # r0 = 3.2 mm, E = 1.2e6: A = pi r0^2, EI = (pi/4) E r0^4, GJ = (pi/2) G r0^4
    assert np.isclose(material.G, material.E / 3.0)
    assert np.isclose(material.A, np.pi * 0.0032 ** 2)
    assert np.isclose(material.EI, 0.25 * np.pi * 1.2e6 * 0.0032 ** 4)
    assert np.isclose(material.EI, 9.883e-5, rtol=1e-3)
    assert np.isclose(material.GJ, material.EI * 2.0 / 3.0)


def test_material_validation():
    with pytest.raises(ValueError):
        MaterialParams.isotropic_rod(E=1.2e6, nu=0.7, r0=3e-3, density=1e3)
    with pytest.raises(ValueError):
        MaterialParams.isotropic_rod(E=-1.0, nu=0.5, r0=3e-3, density=1e3)


def test_axial_stretch():
    assert axial_stretch([5e-3, 0, 0], 5e-3) == pytest.approx(0.0)
    assert axial_stretch([5.5e-3, 0, 0], 5e-3) == pytest.approx(0.1)
    # 3-4-5 triangle edge: length exactly the rest length
    assert axial_stretch([3e-3, 4e-3, 0.0], 5e-3) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        axial_stretch([1.0, 0, 0], 0.0)


def test_stretching_energy_values(material):
    topo, state, rest = build_chain(4.11e-3, 4)
    assert stretching_energy(topo, state, rest, material).energy == 0.0

    # stretch the whole chain by 10%: E = sum 0.5 EA eps^2 lbar
    n = topo.n_nodes
    state.q[:3 * n] = (state.positions(n) * 1.1).ravel()
    update_frames(topo, state)
    res = stretching_energy(topo, state, rest, material)
    expected = 0.5 * material.EA * 0.01 * 4.11e-3
    assert np.isclose(res.energy, expected, rtol=1e-12)


def test_stretching_force_two_node_rod(material):
    topo, state, rest = build_chain(0.01, 2)
    n = topo.n_nodes
    x = state.positions(n)
    x[:, 1] *= 1.05                       # uniaxial stretch eps = 0.05
    state.q[:3 * n] = x.ravel()
    update_frames(topo, state)
    res = stretching_energy(topo, state, rest, material)
    f = res.force[:3 * n].reshape(n, 3)
    mag = material.EA * 0.05
    assert np.isclose(f[0, 1], mag, rtol=1e-12)     # pulled back toward centre
    assert np.isclose(f[-1, 1], -mag, rtol=1e-12)
    assert np.isclose(f[1, 1], 0.0, atol=1e-12 * mag)


def test_material_curvatures_cases():
    # straight rod
    kb = curvature_binormal(np.array([1.0, 0, 0]), np.array([1.0, 0, 0]))
    m1 = np.array([0.0, 1.0, 0.0])
    m2 = np.array([0.0, 0.0, 1.0])
    k1, k2 = material_curvatures(kb, m1, m2, m1, m2)
    assert k1 == pytest.approx(0.0) and k2 == pytest.approx(0.0)

    # planar bend in the plane spanned by the tangent and m1: the binormal
    # aligns with m2, so kappa1 carries the bend and kappa2 vanishes
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([np.cos(0.3), np.sin(0.3), 0.0])
    kb = curvature_binormal(e1, e2)
    m1a, m2a = np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])
    m1b = np.array([-np.sin(0.3), np.cos(0.3), 0.0])
    k1, k2 = material_curvatures(kb, m1a, m2a, m1b, m2a)
    assert abs(k1) > 0.1
    assert k2 == pytest.approx(0.0, abs=1e-14)

    # flipping both material frames flips both curvatures
    k1f, k2f = material_curvatures(kb, -m1a, -m2a, -m1b, -m2a)
    assert k1f == pytest.approx(-k1) and k2f == pytest.approx(-k2)


def test_bending_energy_three_node(material):
    # 3-node rod bent by 10 degrees: E_b = 0.5 (EI/dl) (2 tan 5deg)^2
    topo, state, rest = build_chain(0.02, 2, direction=(1, 0, 0))
    psi = np.radians(10.0)
    n = topo.n_nodes
    x = state.positions(n)
    x[2] = x[1] + 0.01 * np.array([np.cos(psi), np.sin(psi), 0.0])
    state.q[:3 * n] = x.ravel()
    update_frames(topo, state)
    res = bending_energy(topo, state, rest, material)
    expected = 0.5 * (material.EI / 0.01) * (2 * np.tan(psi / 2)) ** 2
    assert np.isclose(res.energy, expected, rtol=1e-10)

    stiffer = MaterialParams.isotropic_rod(E=2.4e6, nu=0.5, r0=3.2e-3,
                                           density=1000.0)
    res2 = bending_energy(topo, state, rest, stiffer)
    assert np.isclose(res2.energy, 2.0 * res.energy, rtol=1e-12)


def test_twisting_energy_values(material):
    topo, state, rest = build_chain(0.02, 4)
    # uniform theta on a straight rod: no twist strain
    state.q[3 * topo.n_nodes:] = 0.7
    assert twisting_energy(topo, state, rest, material).energy == \
        pytest.approx(0.0, abs=1e-18)

    state.q[3 * topo.n_nodes:] = 0.0
    state.q[topo.theta_index(1)] = 0.2    # single jump across node 1
    res = twisting_energy(topo, state, rest, material)
    dl = rest.voronoi_len[0]
    assert np.isclose(res.energy,
                      0.5 * (material.GJ / dl) * 0.04
                      + 0.5 * (material.GJ / dl) * 0.04, rtol=1e-12)


def test_actuated_rest_twist_quadratic(material):
    topo, state, rest = build_chain(0.02, 4)
    energies = []
    for t in (1.0, 2.0):
        rest.rest_twist[0] = 0.05 * t
        energies.append(twisting_energy(topo, state, rest, material).energy)
    assert np.isclose(energies[1], 4.0 * energies[0], rtol=1e-12)
    rest.rest_twist[0] = 0.0


def test_total_elastic_zero_at_build(small_robot, material):
    topo, state, rest = small_robot
    res = total_elastic(topo, state, rest, material)
    assert res.energy == pytest.approx(0.0, abs=1e-20)
    assert np.allclose(res.force, 0.0, atol=1e-12)


def test_force_matches_energy_gradient(small_robot, material):
    topo, state, rest = small_robot
    rng = np.random.default_rng(11)
    for _ in range(3):
        pert = perturbed_state(topo, state, rest, rng)
        res = total_elastic(topo, pert, rest, material)
        g_fd = fd_gradient(topo, rest, material, pert)
        err = np.linalg.norm(-res.force - g_fd) / np.linalg.norm(g_fd)
        assert err < 1e-6


def test_hessian_matches_force_differences(small_robot, material):
    topo, state, rest = small_robot
    rng = np.random.default_rng(12)
    for _ in range(2):
        pert = perturbed_state(topo, state, rest, rng)
        res = total_elastic(topo, pert, rest, material)
        H_fd = fd_hessian(topo, rest, material, pert)
        err = np.linalg.norm(res.hessian.toarray() - H_fd) / np.linalg.norm(H_fd)
        assert err < 1e-4


def test_hessian_symmetry(small_robot, material):
    topo, state, rest = small_robot
    pert = perturbed_state(topo, state, rest, np.random.default_rng(13))
    H = total_elastic(topo, pert, rest, material).hessian
    asym = abs(H - H.T).max()
    assert asym <= 1e-9 * max(abs(H).max(), 1.0)


def test_rigid_motion_invariance(small_robot, material):
    topo, state, rest = small_robot
    rng = np.random.default_rng(14)
    pert = perturbed_state(topo, state, rest, rng)
    e0 = total_elastic(topo, pert, rest, material).energy
    for _ in range(5):
        shifted = pert.copy()
        shifted.q = shifted.q.copy()
        shifted.q[:3 * topo.n_nodes] += np.tile(rng.standard_normal(3),
                                                topo.n_nodes)
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        phi = rng.uniform(-np.pi, np.pi)
        K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]],
                      [-axis[1], axis[0], 0]])
        R = np.eye(3) + np.sin(phi) * K + (1 - np.cos(phi)) * K @ K
        moved = rotate_state(topo, shifted, R, about=rng.standard_normal(3))
        e1 = total_elastic(topo, moved, rest, material).energy
        assert abs(e1 - e0) < 1e-10


def test_force_sums_to_zero(small_robot, material):
    topo, state, rest = small_robot
    rng = np.random.default_rng(15)
    pert = perturbed_state(topo, state, rest, rng)
    f = total_elastic(topo, pert, rest, material).force
    net = f[:3 * topo.n_nodes].reshape(-1, 3).sum(axis=0)
    assert np.all(np.abs(net) < 1e-10)


def test_sparsity_pattern(small_robot, material):
    topo, state, rest = small_robot
    rng = np.random.default_rng(16)
    pert = perturbed_state(topo, state, rest, rng)

    allowed_stretch = set()
    for (a, b) in topo.edges:
        dofs = [3 * a, 3 * a + 1, 3 * a + 2, 3 * b, 3 * b + 1, 3 * b + 2]
        allowed_stretch.update((i, j) for i in dofs for j in dofs)
    H = stretching_energy(topo, pert, rest, material).hessian.tocoo()
    assert set(zip(H.row.tolist(), H.col.tolist())) <= allowed_stretch

    allowed_bt = set()
    for (n0, e0, n1, e1, n2) in topo.springs:
        dofs = []
        for node in (n0, n1, n2):
            dofs += [3 * node, 3 * node + 1, 3 * node + 2]
        dofs += [topo.theta_index(e0), topo.theta_index(e1)]
        assert len(dofs) == 11
        allowed_bt.update((i, j) for i in dofs for j in dofs)
    for term in (bending_energy, twisting_energy):
        H = term(topo, pert, rest, material).hessian.tocoo()
        assert set(zip(H.row.tolist(), H.col.tolist())) <= allowed_bt


def test_quadratic_energy_scaling(small_robot, material):
    topo, state, rest = small_robot
    rng = np.random.default_rng(17)
    dq = rng.standard_normal(topo.n_dof)
    dq[:3 * topo.n_nodes] *= 1e-7 * rest.rest_edge_len.min()
    dq[3 * topo.n_nodes:] *= 1e-6
    e_full = energy_at(topo, rest, material, state, state.q + dq)
    e_half = energy_at(topo, rest, material, state, state.q + 0.5 * dq)
    assert np.isclose(e_half / e_full, 0.25, rtol=1e-3)
