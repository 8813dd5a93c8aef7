"""External forces from the granular medium.

Resistive force theory on the flagella: the local drag per unit length
splits the node velocity into tangential and perpendicular parts with
distinct coefficients eta_t < eta_p, so a deflected rotating rod produces
net thrust.  The head feels a modified Stokes drag and torque with shape
coefficients C1, C2 (the head is not a sphere).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .rod import FLAGELLUM, RobotTopology, SimState, UndeformedConfig


def drag_coefficients(mu: float, L: float, r0: float):
    """Tangential and perpendicular drag coefficients (force per unit
    length per unit speed) of a slender rod of length L and radius r0."""
    if mu <= 0.0:
        raise ValueError("friction constant mu must be positive")
    log_term = np.log(2.0 * L / r0)
    if log_term <= 0.5:
        raise ValueError("geometry too stubby: log(2L/r0) must exceed 1/2")
    eta_t = 2.0 * np.pi * mu / (log_term - 0.5)
    eta_p = 4.0 * np.pi * mu / (log_term + 0.5)
    return eta_t, eta_p


@dataclass(frozen=True)
class MediumParams:
    """Drag model constants.  mu, C1, C2 are fitting parameters."""

    mu: float         # robot-granule friction constant
    eta_t: float      # tangential drag coefficient
    eta_p: float      # perpendicular drag coefficient
    C1: float         # head translational shape coefficient
    C2: float         # head rotational shape coefficient
    R_h: float        # head radius (m)
    R_d: float        # plate radius (m)

    def __post_init__(self):
        if min(self.mu, self.C1, self.C2) <= 0.0:
            raise ValueError("mu, C1, C2 must be positive")
        if not self.eta_p > self.eta_t > 0.0:
            raise ValueError("drag coefficients must satisfy eta_p > eta_t > 0")

    @classmethod
    def from_friction(cls, mu: float, C1: float, C2: float, R_h: float,
                      R_d: float, L: float, r0: float) -> "MediumParams":
        eta_t, eta_p = drag_coefficients(mu, L, r0)
        return cls(mu=mu, eta_t=eta_t, eta_p=eta_p, C1=C1, C2=C2,
                   R_h=R_h, R_d=R_d)

    @property
    def head_drag_coeff(self) -> float:
        return self.C1 * 6.0 * np.pi * self.mu * self.R_h

    @property
    def head_torque_coeff(self) -> float:
        return self.C2 * 8.0 * np.pi * self.mu * self.R_h ** 3


def rft_node_force(velocity, tangent, voronoi_length, medium: MediumParams):
    """Drag force on a node: per-length force law integrated over the
    node's Voronoi length (batched over leading axes)."""
    velocity = np.asarray(velocity, dtype=float)
    tangent = np.asarray(tangent, dtype=float)
    v_t = np.sum(velocity * tangent, axis=-1, keepdims=True) * tangent
    v_p = velocity - v_t
    return -(medium.eta_t * v_t + medium.eta_p * v_p) \
        * np.asarray(voronoi_length)[..., None]


def head_drag(v_h, medium: MediumParams):
    """Translational drag on the head, -C1 (6 pi mu R_h) v_h."""
    return -medium.head_drag_coeff * np.asarray(v_h, dtype=float)


def head_torque(omega_h: float, medium: MediumParams) -> float:
    """Axial drag torque on the head, -C2 (8 pi mu R_h^3) omega_h."""
    return -medium.head_torque_coeff * omega_h


def flagellar_node_tangents(topology: RobotTopology, x: np.ndarray) -> np.ndarray:
    """Unit tangent per node averaged over adjacent flagellar edges.

    Rows for nodes without flagellar edges are zero.
    """
    acc = np.zeros((topology.n_nodes, 3))
    flag = topology.edge_kind == FLAGELLUM
    e = x[topology.edges[flag, 1]] - x[topology.edges[flag, 0]]
    t = e / np.linalg.norm(e, axis=1, keepdims=True)
    np.add.at(acc, topology.edges[flag, 0], t)
    np.add.at(acc, topology.edges[flag, 1], t)
    norms = np.linalg.norm(acc, axis=1)
    nz = norms > 0.0
    acc[nz] /= norms[nz, None]
    return acc


class RFTEnvironment:
    """Assembled drag forces on a robot for the implicit stepper.

    Forces are exact in the implicit velocity (q_new - q_old) / dt; the
    Jacobian treats the tangent projectors as lagged (evaluated at q_old),
    so it is constant within one Newton solve.
    """

    def __init__(self, medium: MediumParams):
        self.medium = medium

    def forces(self, topology: RobotTopology, rest: UndeformedConfig,
               q_new: np.ndarray, q_old: np.ndarray, dt: float) -> np.ndarray:
        med = self.medium
        n = topology.n_nodes
        x_new = q_new[:3 * n].reshape(n, 3)
        v = (q_new[:3 * n] - q_old[:3 * n]).reshape(n, 3) / dt
        F = np.zeros_like(q_new)

        drag_nodes = np.flatnonzero(rest.node_drag_len > 0.0)
        tangents = flagellar_node_tangents(topology, x_new)
        f = rft_node_force(v[drag_nodes], tangents[drag_nodes],
                           rest.node_drag_len[drag_nodes], med)
        F[:3 * n].reshape(n, 3)[drag_nodes] += f

        if topology.head_node is not None:
            F[3 * topology.head_node: 3 * topology.head_node + 3] += \
                head_drag(v[topology.head_node], med)
        if topology.head_edge is not None:
            k = topology.theta_index(topology.head_edge)
            F[k] += head_torque((q_new[k] - q_old[k]) / dt, med)
        return F

    def jacobian_triplets(self, topology: RobotTopology, rest: UndeformedConfig,
                          q_ref: np.ndarray, dt: float):
        """dF_ext/dq_new with lagged tangents evaluated at q_ref."""
        med = self.medium
        n = topology.n_nodes
        x = q_ref[:3 * n].reshape(n, 3)
        drag_nodes = np.flatnonzero(rest.node_drag_len > 0.0)
        t = flagellar_node_tangents(topology, x)[drag_nodes]
        tt = np.einsum("ni,nj->nij", t, t)
        eye = np.eye(3)
        blocks = -(rest.node_drag_len[drag_nodes] / dt)[:, None, None] * (
            med.eta_t * tt + med.eta_p * (eye - tt))

        idx = (3 * drag_nodes[:, None] + np.arange(3)).astype(int)
        rows = np.repeat(idx, 3, axis=1).ravel()
        cols = np.tile(idx, (1, 3)).ravel()
        vals = blocks.ravel()

        extra_r, extra_c, extra_v = [], [], []
        if topology.head_node is not None:
            for i in range(3):
                extra_r.append(3 * topology.head_node + i)
                extra_c.append(3 * topology.head_node + i)
                extra_v.append(-med.head_drag_coeff / dt)
        if topology.head_edge is not None:
            k = topology.theta_index(topology.head_edge)
            extra_r.append(k)
            extra_c.append(k)
            extra_v.append(-med.head_torque_coeff / dt)
        rows = np.concatenate([rows, np.array(extra_r, dtype=int)])
        cols = np.concatenate([cols, np.array(extra_c, dtype=int)])
        vals = np.concatenate([vals, np.array(extra_v)])
        return rows, cols, vals


def external_force_jacobian(topology: RobotTopology, rest: UndeformedConfig,
                            state: SimState, dt: float,
                            medium: MediumParams) -> sp.csr_matrix:
    """Sparse dF_ext/dq for an implicit step of size dt, lagged at ``state``."""
    env = RFTEnvironment(medium)
    rows, cols, vals = env.jacobian_triplets(topology, rest, state.q, dt)
    nd = topology.n_dof
    return sp.coo_matrix((vals, (rows, cols)), shape=(nd, nd)).tocsr()


class UniformLoadEnvironment:
    """Constant force per unit length plus isotropic viscous damping.

    A verification environment: a clamped rod under a uniform transverse
    load settles to the classic cantilever deflection.
    """

    def __init__(self, load_per_length, damping_per_length: float = 1.0):
        self.load = np.asarray(load_per_length, dtype=float)
        self.damping = damping_per_length

    def forces(self, topology: RobotTopology, rest: UndeformedConfig,
               q_new: np.ndarray, q_old: np.ndarray, dt: float) -> np.ndarray:
        n = topology.n_nodes
        lens = rest.node_drag_len[:, None]
        v = (q_new[:3 * n] - q_old[:3 * n]).reshape(n, 3) / dt
        F = np.zeros_like(q_new)
        F[:3 * n] = (lens * self.load - self.damping * lens * v).ravel()
        return F

    def jacobian_triplets(self, topology: RobotTopology, rest: UndeformedConfig,
                          q_ref: np.ndarray, dt: float):
        idx = np.arange(3 * topology.n_nodes)
        vals = -self.damping * np.repeat(rest.node_drag_len, 3) / dt
        return idx, idx, vals
