"""Scratch: finite-difference validation of elastic gradient/Hessian."""
import numpy as np

from flagsim.rod import (RobotGeometry, build_robot, update_frames,
                         compute_ref_twist, parallel_transport)
from flagsim import elastic

rng = np.random.default_rng(0)

geom = RobotGeometry(R_h=0.02, L_p=0.04, n=2, L=0.03, edge_len=0.006)
topo, state, rest = build_robot(geom)
mat = elastic.MaterialParams.isotropic_rod(E=1.2e6, nu=0.5, r0=0.0032,
                                           density=1000.0, rigid_scale=1e4)
print("N nodes", topo.n_nodes, "ndof", topo.n_dof, "springs", topo.n_springs)

# sanity: stress-free as built
res0 = elastic.total_elastic(topo, state, rest, mat)
print("built energy", res0.energy, "max|force|", np.abs(res0.force).max())

# random perturbed consistent state
pert = state.copy()
scale = 0.05 * rest.rest_edge_len.min()
pert.q[:3 * topo.n_nodes] += scale * rng.standard_normal(3 * topo.n_nodes)
pert.q[3 * topo.n_nodes:] += 0.2 * rng.standard_normal(topo.n_edges)
update_frames(topo, pert)

res = elastic.total_elastic(topo, pert, rest, mat)


def energy_at(q):
    x = q[:3 * topo.n_nodes].reshape(-1, 3)
    theta = q[3 * topo.n_nodes:]
    e = x[topo.edges[:, 1]] - x[topo.edges[:, 0]]
    t_new = e / np.linalg.norm(e, axis=1, keepdims=True)
    d1 = parallel_transport(pert.d1, pert.tangent, t_new)
    d1 -= np.sum(d1 * t_new, axis=1, keepdims=True) * t_new
    d1 /= np.linalg.norm(d1, axis=1, keepdims=True)
    d2 = np.cross(t_new, d1)
    rtw = compute_ref_twist(topo, d1, t_new, pert.ref_twist)
    return elastic.elastic_energy_value(topo, rest, mat, x, theta, d1, d2, rtw)


h = 1e-7
g_fd = np.zeros(topo.n_dof)
for j in range(topo.n_dof):
    qp = pert.q.copy(); qp[j] += h
    qm = pert.q.copy(); qm[j] -= h
    g_fd[j] = (energy_at(qp) - energy_at(qm)) / (2 * h)

g_an = -res.force
err = np.linalg.norm(g_an - g_fd) / np.linalg.norm(g_fd)
print("gradient rel err", err)

# Hessian vs FD of gradient


def grad_at(q):
    x = q[:3 * topo.n_nodes].reshape(-1, 3)
    theta = q[3 * topo.n_nodes:]
    e = x[topo.edges[:, 1]] - x[topo.edges[:, 0]]
    t_new = e / np.linalg.norm(e, axis=1, keepdims=True)
    d1 = parallel_transport(pert.d1, pert.tangent, t_new)
    d1 -= np.sum(d1 * t_new, axis=1, keepdims=True) * t_new
    d1 /= np.linalg.norm(d1, axis=1, keepdims=True)
    d2 = np.cross(t_new, d1)
    rtw = compute_ref_twist(topo, d1, t_new, pert.ref_twist)
    ea_e, ei_s, gj_s = elastic.stiffness_tables(topo, mat)
    Es, gs, hs, idx_s = elastic.stretch_terms(topo, rest, ea_e, x)
    Eb, Et, gb, hb, gt, ht, idx_bt = elastic.bend_twist_terms(
        topo, rest, ei_s, gj_s, x, theta, d1, d2, rtw)
    g = elastic.scatter_vector(topo.n_dof, idx_s, gs)
    g += elastic.scatter_vector(topo.n_dof, idx_bt, gb + gt)
    return g


hh = 1e-6
H_fd = np.zeros((topo.n_dof, topo.n_dof))
for j in range(topo.n_dof):
    qp = pert.q.copy(); qp[j] += hh
    qm = pert.q.copy(); qm[j] -= hh
    H_fd[:, j] = (grad_at(qp) - grad_at(qm)) / (2 * hh)

H_an = res.hessian.toarray()
herr = np.linalg.norm(H_an - H_fd) / np.linalg.norm(H_fd)
print("hessian rel err", herr)
print("hessian asymmetry", np.abs(H_an - H_an.T).max())
