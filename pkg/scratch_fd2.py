"""Scratch: isolate Hessian mismatch per energy term."""
import numpy as np

from flagsim.rod import (RobotGeometry, build_robot, update_frames,
                         compute_ref_twist, parallel_transport)
from flagsim import elastic

rng = np.random.default_rng(0)
geom = RobotGeometry(R_h=0.02, L_p=0.04, n=2, L=0.03, edge_len=0.006)
topo, state, rest = build_robot(geom)
mat = elastic.MaterialParams.isotropic_rod(E=1.2e6, nu=0.5, r0=0.0032,
                                           density=1000.0, rigid_scale=1e4)

pert = state.copy()
scale = 0.05 * rest.rest_edge_len.min()
pert.q[:3 * topo.n_nodes] += scale * rng.standard_normal(3 * topo.n_nodes)
pert.q[3 * topo.n_nodes:] += 0.2 * rng.standard_normal(topo.n_edges)
update_frames(topo, pert)


def parts_at(q):
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
    g_s = elastic.scatter_vector(topo.n_dof, idx_s, gs)
    g_b = elastic.scatter_vector(topo.n_dof, idx_bt, gb)
    g_t = elastic.scatter_vector(topo.n_dof, idx_bt, gt)
    return g_s, g_b, g_t, (hs, idx_s), (hb, idx_bt), (ht, idx_bt)


def dense(h, idx):
    rows, cols, vals = elastic.block_triplets(idx, h)
    H = np.zeros((topo.n_dof, topo.n_dof))
    np.add.at(H, (rows, cols), vals)
    return H


g_s0, g_b0, g_t0, hs0, hb0, ht0 = parts_at(pert.q)
H_an = [dense(*hs0), dense(*hb0), dense(*ht0)]

hh = 1e-6
H_fd = [np.zeros((topo.n_dof, topo.n_dof)) for _ in range(3)]
for j in range(topo.n_dof):
    qp = pert.q.copy(); qp[j] += hh
    qm = pert.q.copy(); qm[j] -= hh
    gp = parts_at(qp)[:3]
    gm = parts_at(qm)[:3]
    for k in range(3):
        H_fd[k][:, j] = (gp[k] - gm[k]) / (2 * hh)

for name, k in (("stretch", 0), ("bend", 1), ("twist", 2)):
    err = np.linalg.norm(H_an[k] - 0.5 * (H_fd[k] + H_fd[k].T)) / np.linalg.norm(H_fd[k])
    print(name, "rel err:", err)
    D = H_an[k] - 0.5 * (H_fd[k] + H_fd[k].T)
    i, j = np.unravel_index(np.abs(D).argmax(), D.shape)
    print("  worst entry", (i, j), D[i, j], "fd", H_fd[k][i, j])
