"""Discrete stretching, bending and twisting energies with analytic
gradient (elastic force) and Hessian.

Strain measures follow the standard discrete-rod construction: axial
stretch per edge, material curvatures per bend/twist spring via the
curvature binormal, and twist per spring as the difference of twist
angles plus the reference twist.  Gradients and Hessians are assembled
spring by spring; each stretching spring touches 6 DOFs and each
bend/twist spring 11 DOFs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .rod import (RobotTopology, SimState, UndeformedConfig, cross3,
                  curvature_binormal, edge_vectors)


@dataclass(frozen=True)
class MaterialParams:
    """Cross-section and material constants of the rods (SI units)."""

    E: float              # Young's modulus (Pa)
    nu: float             # Poisson ratio
    G: float              # shear modulus (Pa)
    r0: float             # rod radius (m)
    A: float              # cross-section area (m^2)
    EA: float             # stretching stiffness (N)
    EI: float             # bending stiffness (N m^2)
    GJ: float             # twisting stiffness (N m^2)
    density: float        # (kg/m^3)
    rigid_scale: float    # stiffness multiplier for head/plate segments

    @classmethod
    def isotropic_rod(cls, E: float, nu: float, r0: float, density: float,
                      rigid_scale: float = 1e4) -> "MaterialParams":
        """Build from primitives; GJ uses the polar second moment (pi/2) r0^4."""
        if not 0.0 <= nu <= 0.5:
            raise ValueError("Poisson ratio must be in [0, 0.5]")
        if E <= 0.0 or r0 <= 0.0 or density <= 0.0:
            raise ValueError("E, r0 and density must be positive")
        G = E / (2.0 * (1.0 + nu))
        A = np.pi * r0 ** 2
        return cls(E=E, nu=nu, G=G, r0=r0, A=A, EA=E * A,
                   EI=0.25 * np.pi * E * r0 ** 4,
                   GJ=0.5 * np.pi * G * r0 ** 4,
                   density=density, rigid_scale=rigid_scale)


@dataclass
class ElasticResult:
    """Energy, force (-gradient) and sparse symmetric Hessian of one term."""

    energy: float
    force: np.ndarray
    hessian: sp.csr_matrix


def axial_stretch(edge, undeformed_length):
    """Axial stretch |e| / |e_bar| - 1 of an edge vector (batched)."""
    undeformed_length = np.asarray(undeformed_length, dtype=float)
    if np.any(undeformed_length <= 0.0):
        raise ValueError("undeformed length must be positive")
    return (np.linalg.norm(np.asarray(edge, dtype=float), axis=-1)
            / undeformed_length - 1.0)


def material_curvatures(binormal, m1e, m2e, m1f, m2f):
    """Scalar curvatures along the material directors of adjacent edges."""
    kappa1 = 0.5 * np.sum((np.asarray(m2e) + np.asarray(m2f)) * binormal, axis=-1)
    kappa2 = 0.5 * np.sum((np.asarray(m1e) + np.asarray(m1f)) * binormal, axis=-1)
    return kappa1, kappa2


def stiffness_tables(topology: RobotTopology, material: MaterialParams):
    """Per-edge EA and per-spring EI, GJ with the rigid multiplier applied."""
    edge_scale = np.where(topology.rigid_edge, material.rigid_scale, 1.0)
    spring_scale = np.where(topology.spring_rigid, material.rigid_scale, 1.0)
    return (material.EA * edge_scale, material.EI * spring_scale,
            material.GJ * spring_scale)


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _symm(m):
    return m + np.swapaxes(m, -1, -2)


def _crossmat(v):
    z = np.zeros(v.shape[:-1])
    return np.stack([
        np.stack([z, -v[..., 2], v[..., 1]], axis=-1),
        np.stack([v[..., 2], z, -v[..., 0]], axis=-1),
        np.stack([-v[..., 1], v[..., 0], z], axis=-1),
    ], axis=-2)


def stretch_terms(topology: RobotTopology, rest: UndeformedConfig,
                  ea_edge: np.ndarray, x: np.ndarray):
    """Per-edge stretching energy, gradient blocks and Hessian blocks.

    Returns (E, grad (Ne, 6), hess (Ne, 6, 6), dof_idx (Ne, 6)).
    """
    _, lens, tangent = edge_vectors(topology, x)
    lbar = rest.rest_edge_len
    eps = lens / lbar - 1.0
    energy = 0.5 * np.sum(ea_edge * eps ** 2 * lbar)

    g_unit = (ea_edge * eps)[:, None] * tangent
    grad = np.concatenate([-g_unit, g_unit], axis=1)

    tt = _outer(tangent, tangent)
    M = ea_edge[:, None, None] * ((1.0 / lbar - 1.0 / lens)[:, None, None]
                                  * np.eye(3) + tt / lens[:, None, None])
    hess = np.empty((topology.n_edges, 6, 6))
    hess[:, :3, :3] = M
    hess[:, 3:, 3:] = M
    hess[:, :3, 3:] = -M
    hess[:, 3:, :3] = -M

    idx = np.empty((topology.n_edges, 6), dtype=int)
    idx[:, 0:3] = 3 * topology.edges[:, 0:1] + np.arange(3)
    idx[:, 3:6] = 3 * topology.edges[:, 1:2] + np.arange(3)
    return energy, grad, hess, idx


def spring_strains(topology: RobotTopology, x: np.ndarray, theta: np.ndarray,
                   d1: np.ndarray, d2: np.ndarray, ref_twist: np.ndarray):
    """Material curvatures (kappa1, kappa2) and twist tau for every spring."""
    spr = topology.springs
    ea, eb = spr[:, 1], spr[:, 3]
    ct, st = np.cos(theta)[:, None], np.sin(theta)[:, None]
    m1 = ct * d1 + st * d2
    m2 = -st * d1 + ct * d2
    e_prev = x[spr[:, 2]] - x[spr[:, 0]]
    e_next = x[spr[:, 4]] - x[spr[:, 2]]
    kb = curvature_binormal(e_prev, e_next)
    kappa1, kappa2 = material_curvatures(kb, m1[ea], m2[ea], m1[eb], m2[eb])
    tau = theta[eb] - theta[ea] + ref_twist
    return kappa1, kappa2, tau


class _SpringContext:
    """Intermediates of the gradient pass reused by the Hessian pass."""

    __slots__ = ("kb", "te", "tf", "tilde_t", "tilde_d1", "tilde_d2", "chi",
                 "inv_e", "inv_f", "m1e", "m2e", "m1f", "m2f",
                 "kappa1", "kappa2", "kb_m1e", "kb_m1f", "kb_m2e", "kb_m2f",
                 "grad_k1", "grad_k2", "grad_tw", "dk1", "dk2", "dtau",
                 "eb_coeff", "et_coeff")


def bend_twist_gradients(topology: RobotTopology, rest: UndeformedConfig,
                         ei_spring: np.ndarray, gj_spring: np.ndarray,
                         x: np.ndarray, theta: np.ndarray,
                         d1: np.ndarray, d2: np.ndarray,
                         ref_twist: np.ndarray):
    """Bending and twisting energies and gradient blocks over all springs.

    Returns (E_b, E_t, grad_b (Ns, 11), grad_t (Ns, 11), dof_idx (Ns, 11),
    context) where context feeds :func:`bend_twist_hessians`.
    """
    spr = topology.springs
    n0, ea, n1, eb, n2 = (spr[:, i] for i in range(5))
    ns = len(spr)
    ct, st = np.cos(theta)[:, None], np.sin(theta)[:, None]
    m1 = ct * d1 + st * d2
    m2 = -st * d1 + ct * d2

    ee = x[n1] - x[n0]
    ef = x[n2] - x[n1]
    norm_e = np.linalg.norm(ee, axis=1)
    norm_f = np.linalg.norm(ef, axis=1)
    te = ee / norm_e[:, None]
    tf = ef / norm_f[:, None]
    m1e, m2e, m1f, m2f = m1[ea], m2[ea], m1[eb], m2[eb]

    chi = 1.0 + np.sum(te * tf, axis=1)
    kb = curvature_binormal(ee, ef)
    tilde_t = (te + tf) / chi[:, None]
    tilde_d1 = (m1e + m1f) / chi[:, None]
    tilde_d2 = (m2e + m2f) / chi[:, None]
    kappa1, kappa2 = material_curvatures(kb, m1e, m2e, m1f, m2f)

    inv_e = 1.0 / norm_e
    inv_f = 1.0 / norm_f
    tf_c_d2 = cross3(tf, tilde_d2)
    te_c_d2 = cross3(te, tilde_d2)
    tf_c_d1 = cross3(tf, tilde_d1)
    te_c_d1 = cross3(te, tilde_d1)

    Dk1De = inv_e[:, None] * (-kappa1[:, None] * tilde_t + tf_c_d2)
    Dk1Df = inv_f[:, None] * (-kappa1[:, None] * tilde_t - te_c_d2)
    Dk2De = inv_e[:, None] * (-kappa2[:, None] * tilde_t + tf_c_d1)
    Dk2Df = inv_f[:, None] * (-kappa2[:, None] * tilde_t - te_c_d1)

    kb_m1e = np.sum(kb * m1e, axis=1)
    kb_m1f = np.sum(kb * m1f, axis=1)
    kb_m2e = np.sum(kb * m2e, axis=1)
    kb_m2f = np.sum(kb * m2f, axis=1)

    grad_k1 = np.zeros((ns, 11))
    grad_k2 = np.zeros((ns, 11))
    grad_k1[:, 0:3] = -Dk1De
    grad_k1[:, 3:6] = Dk1De - Dk1Df
    grad_k1[:, 6:9] = Dk1Df
    grad_k2[:, 0:3] = -Dk2De
    grad_k2[:, 3:6] = Dk2De - Dk2Df
    grad_k2[:, 6:9] = Dk2Df
    grad_k1[:, 9] = -0.5 * kb_m1e
    grad_k1[:, 10] = -0.5 * kb_m1f
    grad_k2[:, 9] = 0.5 * kb_m2e
    grad_k2[:, 10] = 0.5 * kb_m2f

    inv_len = 1.0 / rest.voronoi_len
    dk1 = kappa1 - rest.rest_kappa[:, 0]
    dk2 = kappa2 - rest.rest_kappa[:, 1]
    eb_coeff = ei_spring * inv_len
    energy_b = 0.5 * np.sum(eb_coeff * (dk1 ** 2 + dk2 ** 2))
    grad_b = eb_coeff[:, None] * (dk1[:, None] * grad_k1 + dk2[:, None] * grad_k2)

    # Twist: tau = theta_f - theta_e + reference twist.  The position entries
    # of the twist gradient come from the holonomy of the transported frames.
    tau = theta[eb] - theta[ea] + ref_twist
    dtau = tau - rest.rest_twist
    grad_tw = np.zeros((ns, 11))
    grad_tw[:, 0:3] = (-0.5 * inv_e)[:, None] * kb
    grad_tw[:, 6:9] = (0.5 * inv_f)[:, None] * kb
    grad_tw[:, 3:6] = -(grad_tw[:, 0:3] + grad_tw[:, 6:9])
    grad_tw[:, 9] = -1.0
    grad_tw[:, 10] = 1.0
    et_coeff = gj_spring * inv_len
    energy_t = 0.5 * np.sum(et_coeff * dtau ** 2)
    grad_t = (et_coeff * dtau)[:, None] * grad_tw

    idx = np.empty((ns, 11), dtype=int)
    idx[:, 0:3] = 3 * n0[:, None] + np.arange(3)
    idx[:, 3:6] = 3 * n1[:, None] + np.arange(3)
    idx[:, 6:9] = 3 * n2[:, None] + np.arange(3)
    idx[:, 9] = 3 * topology.n_nodes + ea
    idx[:, 10] = 3 * topology.n_nodes + eb

    ctx = _SpringContext()
    ctx.kb, ctx.te, ctx.tf = kb, te, tf
    ctx.tilde_t, ctx.tilde_d1, ctx.tilde_d2, ctx.chi = (tilde_t, tilde_d1,
                                                        tilde_d2, chi)
    ctx.inv_e, ctx.inv_f = inv_e, inv_f
    ctx.m1e, ctx.m2e, ctx.m1f, ctx.m2f = m1e, m2e, m1f, m2f
    ctx.kappa1, ctx.kappa2 = kappa1, kappa2
    ctx.kb_m1e, ctx.kb_m1f, ctx.kb_m2e, ctx.kb_m2f = (kb_m1e, kb_m1f,
                                                      kb_m2e, kb_m2f)
    ctx.grad_k1, ctx.grad_k2, ctx.grad_tw = grad_k1, grad_k2, grad_tw
    ctx.dk1, ctx.dk2, ctx.dtau = dk1, dk2, dtau
    ctx.eb_coeff, ctx.et_coeff = eb_coeff, et_coeff
    return energy_b, energy_t, grad_b, grad_t, idx, ctx


def bend_twist_hessians(ctx: _SpringContext):
    """Hessian blocks (Ns, 11, 11) of the bending and twisting energies."""
    kb, te, tf = ctx.kb, ctx.te, ctx.tf
    tilde_t, tilde_d1, tilde_d2 = ctx.tilde_t, ctx.tilde_d1, ctx.tilde_d2
    inv_e, inv_f, chi = ctx.inv_e, ctx.inv_f, ctx.chi
    m1e, m2e, m1f, m2f = ctx.m1e, ctx.m2e, ctx.m1f, ctx.m2f
    ns = len(kb)

    eye = np.eye(3)
    inv2_e = (inv_e ** 2)[:, None, None]
    inv2_f = (inv_f ** 2)[:, None, None]
    inv_ef = (inv_e * inv_f)[:, None, None]
    chi_ = chi[:, None, None]
    tt = _outer(tilde_t, tilde_t)
    tete = _outer(te, te)
    tftf = _outer(tf, tf)
    tetf = _outer(te, tf)
    tf_c_d2 = cross3(tf, tilde_d2)
    te_c_d2 = cross3(te, tilde_d2)
    tf_c_d1 = cross3(tf, tilde_d1)
    te_c_d1 = cross3(te, tilde_d1)

    # Position-position curvature blocks.  Diagonal blocks are written in
    # explicitly symmetric form; only the symmetric part is a second
    # derivative of the scalar curvature.
    def curvature_blocks(kap, tf_c, te_c, m_e, m_f, d_tilde):
        k = kap[:, None, None]
        De2 = (inv2_e * (2.0 * k * tt - _symm(_outer(tf_c, tilde_t)))
               - (k * inv2_e / chi_) * (eye - tete)
               + 0.25 * inv2_e * _symm(_outer(kb, m_e)))
        Df2 = (inv2_f * (2.0 * k * tt + _symm(_outer(te_c, tilde_t)))
               - (k * inv2_f / chi_) * (eye - tftf)
               + 0.25 * inv2_f * _symm(_outer(kb, m_f)))
        DeDf = (-(k * inv_ef / chi_) * (eye + tetf)
                + inv_ef * (2.0 * k * tt - _outer(tf_c, tilde_t)
                            + _outer(tilde_t, te_c) - _crossmat(d_tilde)))
        return De2, Df2, DeDf

    H1De2, H1Df2, H1DeDf = curvature_blocks(ctx.kappa1, tf_c_d2, te_c_d2,
                                            m2e, m2f, tilde_d2)
    H2De2, H2Df2, H2DeDf = curvature_blocks(ctx.kappa2, tf_c_d1, te_c_d1,
                                            m1e, m1f, tilde_d1)

    inv_e_ = inv_e[:, None]
    inv_f_ = inv_f[:, None]
    chi_v = chi[:, None]
    kb_m1e, kb_m1f = ctx.kb_m1e[:, None], ctx.kb_m1f[:, None]
    kb_m2e, kb_m2f = ctx.kb_m2e[:, None], ctx.kb_m2f[:, None]
    # curvature-twist couplings d^2 kappa / (d position d theta)
    k1_e_te = inv_e_ * (0.5 * kb_m1e * tilde_t - cross3(tf, m1e) / chi_v)
    k1_e_tf = inv_e_ * (0.5 * kb_m1f * tilde_t - cross3(tf, m1f) / chi_v)
    k1_f_te = inv_f_ * (0.5 * kb_m1e * tilde_t + cross3(te, m1e) / chi_v)
    k1_f_tf = inv_f_ * (0.5 * kb_m1f * tilde_t + cross3(te, m1f) / chi_v)
    k2_e_te = inv_e_ * (-0.5 * kb_m2e * tilde_t + cross3(tf, m2e) / chi_v)
    k2_e_tf = inv_e_ * (-0.5 * kb_m2f * tilde_t + cross3(tf, m2f) / chi_v)
    k2_f_te = inv_f_ * (-0.5 * kb_m2e * tilde_t - cross3(te, m2e) / chi_v)
    k2_f_tf = inv_f_ * (-0.5 * kb_m2f * tilde_t - cross3(te, m2f) / chi_v)

    def assemble_spring_hess(De2, Df2, DeDf, e_te, e_tf, f_te, f_tf,
                             tt_e, tt_f):
        DfDe = np.swapaxes(DeDf, 1, 2)
        H = np.zeros((ns, 11, 11))
        H[:, 0:3, 0:3] = De2
        H[:, 0:3, 3:6] = -De2 + DeDf
        H[:, 0:3, 6:9] = -DeDf
        H[:, 3:6, 0:3] = -De2 + DfDe
        H[:, 3:6, 3:6] = De2 - DeDf - DfDe + Df2
        H[:, 3:6, 6:9] = DeDf - Df2
        H[:, 6:9, 0:3] = -DfDe
        H[:, 6:9, 3:6] = DfDe - Df2
        H[:, 6:9, 6:9] = Df2
        H[:, 9, 9] = tt_e
        H[:, 10, 10] = tt_f
        for col, ce, cf in ((9, e_te, f_te), (10, e_tf, f_tf)):
            H[:, 0:3, col] = -ce
            H[:, 3:6, col] = ce - cf
            H[:, 6:9, col] = cf
            H[:, col, 0:3] = H[:, 0:3, col]
            H[:, col, 3:6] = H[:, 3:6, col]
            H[:, col, 6:9] = H[:, 6:9, col]
        return H

    DDk1 = assemble_spring_hess(H1De2, H1Df2, H1DeDf,
                                k1_e_te, k1_e_tf, k1_f_te, k1_f_tf,
                                -0.5 * ctx.kb_m2e, -0.5 * ctx.kb_m2f)
    DDk2 = assemble_spring_hess(H2De2, H2Df2, H2DeDf,
                                k2_e_te, k2_e_tf, k2_f_te, k2_f_tf,
                                -0.5 * ctx.kb_m1e, -0.5 * ctx.kb_m1f)

    hess_b = ctx.eb_coeff[:, None, None] * (
        _outer(ctx.grad_k1, ctx.grad_k1) + _outer(ctx.grad_k2, ctx.grad_k2)
        + ctx.dk1[:, None, None] * DDk1 + ctx.dk2[:, None, None] * DDk2)

    DtDe2 = -0.25 * inv2_e * _symm(_outer(kb, te + tilde_t))
    DtDf2 = -0.25 * inv2_f * _symm(_outer(kb, tf + tilde_t))
    DtDeDf = 0.5 * inv_ef * ((2.0 / chi_) * _crossmat(te) - _outer(kb, tilde_t))
    DtDfDe = np.swapaxes(DtDeDf, 1, 2)
    DDt = np.zeros((ns, 11, 11))
    DDt[:, 0:3, 0:3] = DtDe2
    DDt[:, 0:3, 3:6] = -DtDe2 + DtDeDf
    DDt[:, 0:3, 6:9] = -DtDeDf
    DDt[:, 3:6, 0:3] = -DtDe2 + DtDfDe
    DDt[:, 3:6, 3:6] = DtDe2 - DtDeDf - DtDfDe + DtDf2
    DDt[:, 3:6, 6:9] = DtDeDf - DtDf2
    DDt[:, 6:9, 0:3] = -DtDfDe
    DDt[:, 6:9, 3:6] = DtDfDe - DtDf2
    DDt[:, 6:9, 6:9] = DtDf2

    hess_t = ctx.et_coeff[:, None, None] * (
        _outer(ctx.grad_tw, ctx.grad_tw) + ctx.dtau[:, None, None] * DDt)
    return hess_b, hess_t


def bend_twist_terms(topology: RobotTopology, rest: UndeformedConfig,
                     ei_spring: np.ndarray, gj_spring: np.ndarray,
                     x: np.ndarray, theta: np.ndarray,
                     d1: np.ndarray, d2: np.ndarray, ref_twist: np.ndarray):
    """Batched bending and twisting energy terms over all springs.

    Returns (E_b, E_t, grad_b, hess_b, grad_t, hess_t, dof_idx) with blocks
    over the 11 DOFs (x0, x1, x2, theta_e, theta_f) of each spring.
    """
    Eb, Et, grad_b, grad_t, idx, ctx = bend_twist_gradients(
        topology, rest, ei_spring, gj_spring, x, theta, d1, d2, ref_twist)
    hess_b, hess_t = bend_twist_hessians(ctx)
    return Eb, Et, grad_b, hess_b, grad_t, hess_t, idx


def scatter_vector(n_dof: int, idx: np.ndarray, blocks: np.ndarray) -> np.ndarray:
    out = np.zeros(n_dof)
    np.add.at(out, idx.ravel(), blocks.ravel())
    return out


def block_triplets(idx: np.ndarray, blocks: np.ndarray):
    w = idx.shape[1]
    rows = np.repeat(idx, w, axis=1).ravel()
    cols = np.tile(idx, (1, w)).ravel()
    return rows, cols, blocks.ravel()


def _wrap_result(n_dof, energy, grad_vec, rows, cols, vals) -> ElasticResult:
    H = sp.coo_matrix((vals, (rows, cols)), shape=(n_dof, n_dof)).tocsr()
    H = (0.5 * (H + H.T)).tocsr()
    return ElasticResult(energy=energy, force=-grad_vec, hessian=H)


def stretching_energy(topology: RobotTopology, state: SimState,
                      undeformed: UndeformedConfig,
                      material: MaterialParams) -> ElasticResult:
    ea_edge, _, _ = stiffness_tables(topology, material)
    x = state.positions(topology.n_nodes)
    E, grad, hess, idx = stretch_terms(topology, undeformed, ea_edge, x)
    rows, cols, vals = block_triplets(idx, hess)
    return _wrap_result(topology.n_dof, E,
                        scatter_vector(topology.n_dof, idx, grad),
                        rows, cols, vals)


def _bend_twist_result(topology, state, undeformed, material, which):
    _, ei_s, gj_s = stiffness_tables(topology, material)
    x = state.positions(topology.n_nodes)
    theta = state.thetas(topology.n_nodes)
    Eb, Et, gb, hb, gt, ht, idx = bend_twist_terms(
        topology, undeformed, ei_s, gj_s, x, theta,
        state.d1, state.d2, state.ref_twist)
    E, g, h = (Eb, gb, hb) if which == "bend" else (Et, gt, ht)
    rows, cols, vals = block_triplets(idx, h)
    return _wrap_result(topology.n_dof, E,
                        scatter_vector(topology.n_dof, idx, g),
                        rows, cols, vals)


def bending_energy(topology: RobotTopology, state: SimState,
                   undeformed: UndeformedConfig,
                   material: MaterialParams) -> ElasticResult:
    return _bend_twist_result(topology, state, undeformed, material, "bend")


def twisting_energy(topology: RobotTopology, state: SimState,
                    undeformed: UndeformedConfig,
                    material: MaterialParams) -> ElasticResult:
    return _bend_twist_result(topology, state, undeformed, material, "twist")


def total_elastic(topology: RobotTopology, state: SimState,
                  undeformed: UndeformedConfig,
                  material: MaterialParams) -> ElasticResult:
    """Sum of stretching, bending and twisting contributions."""
    ea_edge, ei_s, gj_s = stiffness_tables(topology, material)
    x = state.positions(topology.n_nodes)
    theta = state.thetas(topology.n_nodes)
    Es, gs, hs, idx_s = stretch_terms(topology, undeformed, ea_edge, x)
    Eb, Et, gb, hb, gt, ht, idx_bt = bend_twist_terms(
        topology, undeformed, ei_s, gj_s, x, theta,
        state.d1, state.d2, state.ref_twist)
    grad = scatter_vector(topology.n_dof, idx_s, gs)
    grad += scatter_vector(topology.n_dof, idx_bt, gb + gt)
    r1, c1, v1 = block_triplets(idx_s, hs)
    r2, c2, v2 = block_triplets(idx_bt, hb + ht)
    return _wrap_result(topology.n_dof, Es + Eb + Et, grad,
                        np.concatenate([r1, r2]), np.concatenate([c1, c2]),
                        np.concatenate([v1, v2]))


def elastic_energy_value(topology: RobotTopology, rest: UndeformedConfig,
                         material: MaterialParams, x: np.ndarray,
                         theta: np.ndarray, d1: np.ndarray, d2: np.ndarray,
                         ref_twist: np.ndarray) -> float:
    """Total elastic energy alone (cheap path for finite-difference oracles)."""
    ea_edge, ei_s, gj_s = stiffness_tables(topology, material)
    _, lens, _ = edge_vectors(topology, x)
    eps = lens / rest.rest_edge_len - 1.0
    Es = 0.5 * np.sum(ea_edge * eps ** 2 * rest.rest_edge_len)

    kappa1, kappa2, tau = spring_strains(topology, x, theta, d1, d2, ref_twist)
    inv_len = 1.0 / rest.voronoi_len
    Eb = 0.5 * np.sum(ei_s * inv_len * ((kappa1 - rest.rest_kappa[:, 0]) ** 2
                                        + (kappa2 - rest.rest_kappa[:, 1]) ** 2))
    Et = 0.5 * np.sum(gj_s * inv_len * (tau - rest.rest_twist) ** 2)
    return Es + Eb + Et
