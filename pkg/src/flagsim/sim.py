"""Fully implicit dynamic simulation of the robot.

Each DOF marches by backward Euler,

    (m_k / dt) [ (q_k(t+dt) - q_k(t)) / dt - qdot_k(t) ] - F_elastic - F_ext = 0,

solved with Newton-Raphson on a sparse Jacobian (inertia / dt^2 + elastic
Hessian - external force gradient).  The joint node couples the flagellar
chains, so the Jacobian is sparse but not banded; it is factorized with a
fill-reducing sparse LU.

Actuation enters through the rest twist of the spring at the head centre,
which grows linearly at the motor speed; head and flagella then
counter-rotate so their rates sum to the motor rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import elastic
from .errors import SolverError
from .rod import (RobotTopology, SimState, UndeformedConfig,
                  compute_ref_twist, cross3, edge_vectors, parallel_transport)


@dataclass
class StepperConfig:
    """Implicit stepper settings."""

    dt: float = 1e-2               # nominal time step (s)
    tol: float = 1e-8              # residual tolerance per free DOF
    max_newton_iter: int = 50
    max_halvings: int = 8          # adaptive dt halvings before giving up
    recovery_steps: int = 10       # successful steps before dt is restored
    mass_scale: float = 1.0        # multiplies all lumped masses

    def __post_init__(self):
        if self.dt <= 0.0 or self.tol <= 0.0:
            raise ValueError("dt and tol must be positive")


@dataclass
class LocomotionMetrics:
    """Steady-state locomotion summary.

    ``omega_h`` and ``omega_t`` are signed rates about the robot axis;
    head and flagella counter-rotate, so they carry opposite signs and
    |omega_h| + |omega_t| approximates the motor rate.
    """

    v: float           # translation speed along the propulsion axis (m/s)
    omega_h: float     # head rotation rate (rad/s)
    omega_t: float     # flagella rotation rate (rad/s)
    steady: bool
    elapsed: float     # simulated time (s)


@dataclass
class TrajectoryRecord:
    t: float
    x: float
    y: float
    z: float
    v: float
    omega_h: float
    omega_t: float
    newton_iters: int


def actuate(undeformed: UndeformedConfig, topology: RobotTopology,
            omega_T: float, t: float) -> UndeformedConfig:
    """Set the motor-driven rest twist at the head spring to omega_T * t."""
    if topology.actuation_spring is None:
        raise ValueError("topology has no actuation spring")
    undeformed.rest_twist[topology.actuation_spring] = omega_T * t
    return undeformed


def lumped_masses(topology: RobotTopology, rest: UndeformedConfig,
                  material: elastic.MaterialParams,
                  mass_scale: float = 1.0) -> np.ndarray:
    """Lumped node masses and edge rotational inertias from Voronoi volumes."""
    line_density = material.density * material.A
    edge_mass = line_density * rest.rest_edge_len
    node_mass = np.zeros(topology.n_nodes)
    np.add.at(node_mass, topology.edges[:, 0], 0.5 * edge_mass)
    np.add.at(node_mass, topology.edges[:, 1], 0.5 * edge_mass)
    theta_inertia = 0.5 * edge_mass * material.r0 ** 2
    return mass_scale * np.concatenate([np.repeat(node_mass, 3), theta_inertia])


class Stepper:
    """Owns one robot state and advances it implicitly in time.

    ``environment`` provides the external forces; see
    :class:`flagsim.media.RFTEnvironment` for the granular drag model.
    ``fixed_dofs`` are held at their initial values (used for clamped
    boundary conditions in verification problems).
    """

    def __init__(self, topology: RobotTopology, state: SimState,
                 undeformed: UndeformedConfig,
                 material: elastic.MaterialParams, environment,
                 config: StepperConfig | None = None, omega_T: float = 0.0,
                 fixed_dofs=()):
        self.topology = topology
        self.state = state
        self.rest = undeformed.copy()
        self.material = material
        self.environment = environment
        self.config = config or StepperConfig()
        self.omega_T = omega_T

        self.mass = lumped_masses(topology, self.rest, material,
                                  self.config.mass_scale)
        self.stiffness = elastic.stiffness_tables(topology, material)
        self.free = np.ones(topology.n_dof, dtype=bool)
        self.free[list(fixed_dofs)] = False

        self.newton_iters_last = 0
        self.residual_last = 0.0
        self.max_rigid_strain = 0.0
        self._halvings = 0
        self._steps_since_failure = 0
        self._pattern = None

    def _build_pattern(self, ext_rows, ext_cols):
        """Cache the Jacobian sparsity: triplet order is fixed, so each
        assembly reduces to a bincount into the CSC data array."""
        topo = self.topology
        nd = topo.n_dof
        idx_s = np.empty((topo.n_edges, 6), dtype=int)
        idx_s[:, 0:3] = 3 * topo.edges[:, 0:1] + np.arange(3)
        idx_s[:, 3:6] = 3 * topo.edges[:, 1:2] + np.arange(3)
        r1, c1, _ = elastic.block_triplets(idx_s, np.zeros((topo.n_edges, 6, 6)))
        idx_bt = np.empty((topo.n_springs, 11), dtype=int)
        spr = topo.springs
        idx_bt[:, 0:3] = 3 * spr[:, 0:1] + np.arange(3)
        idx_bt[:, 3:6] = 3 * spr[:, 2:3] + np.arange(3)
        idx_bt[:, 6:9] = 3 * spr[:, 4:5] + np.arange(3)
        idx_bt[:, 9] = 3 * topo.n_nodes + spr[:, 1]
        idx_bt[:, 10] = 3 * topo.n_nodes + spr[:, 3]
        r2, c2, _ = elastic.block_triplets(idx_bt, np.zeros((topo.n_springs, 11, 11)))

        rows = np.concatenate([np.arange(nd), r1, r2, ext_rows])
        cols = np.concatenate([np.arange(nd), c1, c2, ext_cols])
        key = cols.astype(np.int64) * nd + rows
        uniq, pos = np.unique(key, return_inverse=True)
        u_rows = (uniq % nd).astype(np.int32)
        u_cols = uniq // nd
        indptr = np.searchsorted(u_cols, np.arange(nd + 1)).astype(np.int32)
        template = sp.csc_matrix((np.zeros(len(uniq)), u_rows, indptr),
                                 shape=(nd, nd))
        # fixed DOFs: zero their rows/columns; unit diagonal keeps J regular
        trip_free = self.free[rows] & self.free[cols]
        self._pattern = (pos, len(uniq), template, trip_free)

    def _assemble(self, vals):
        pos, nnz, template, trip_free = self._pattern
        nd = self.topology.n_dof
        if not self.free.all():
            vals = np.where(trip_free, vals, 0.0)
            vals[:nd][~self.free] = 1.0
        template.data = np.bincount(pos, weights=vals, minlength=nnz)
        return template

    # -- single implicit solve over one sub-interval --------------------

    def _solve_substep(self, dt: float) -> bool:
        topo, rest, cfg = self.topology, self.rest, self.config
        n = topo.n_nodes
        state = self.state
        q_old = state.q
        u_old = state.u
        if topo.actuation_spring is not None:
            actuate(rest, topo, self.omega_T, state.t + dt)

        mass = self.mass
        env = self.environment
        ext_rows, ext_cols, ext_vals = env.jacobian_triplets(topo, rest, q_old, dt)
        if self._pattern is None:
            self._build_pattern(ext_rows, ext_cols)
        ea_edge, ei_s, gj_s = self.stiffness

        q = q_old + dt * u_old
        q[~self.free] = q_old[~self.free]
        tol = cfg.tol * self.free.sum()
        inertia_diag = mass / dt ** 2

        d1 = d2 = tangent = ref_twist = None
        converged = False
        iters = 0
        for iteration in range(cfg.max_newton_iter + 1):
            x = q[:3 * n].reshape(n, 3)
            theta = q[3 * n:]
            _, _, t_new = edge_vectors(topo, x)
            d1 = parallel_transport(state.d1, state.tangent, t_new)
            d1 -= np.sum(d1 * t_new, axis=1, keepdims=True) * t_new
            d1 /= np.linalg.norm(d1, axis=1, keepdims=True)
            d2 = cross3(t_new, d1)
            tangent = t_new
            ref_twist = compute_ref_twist(topo, d1, t_new, state.ref_twist)

            _, gs, hs, idx_s = elastic.stretch_terms(topo, rest, ea_edge, x)
            _, _, gb, gt, idx_bt, ctx = elastic.bend_twist_gradients(
                topo, rest, ei_s, gj_s, x, theta, d1, d2, ref_twist)
            grad = elastic.scatter_vector(topo.n_dof, idx_s, gs)
            grad += elastic.scatter_vector(topo.n_dof, idx_bt, gb + gt)
            f_ext = env.forces(topo, rest, q, q_old, dt)

            residual = mass / dt * ((q - q_old) / dt - u_old) + grad - f_ext
            res_norm = np.linalg.norm(residual[self.free])
            if res_norm < tol:
                converged = True
                break
            if iteration == cfg.max_newton_iter:
                break

            hb, ht = elastic.bend_twist_hessians(ctx)
            _, _, v1 = elastic.block_triplets(idx_s, hs)
            _, _, v2 = elastic.block_triplets(idx_bt, hb + ht)
            vals = np.concatenate([inertia_diag, v1, v2, -ext_vals])
            J = self._assemble(vals)
            residual[~self.free] = 0.0
            dq = spla.spsolve(J, residual)
            q = q - dq
            iters += 1

        self.newton_iters_last += iters
        if not converged:
            return False

        state.u = (q - q_old) / dt
        state.q = q
        state.d1, state.d2, state.tangent = d1, d2, tangent
        state.ref_twist = ref_twist
        state.t += dt
        self.residual_last = res_norm
        if topo.rigid_edge.any():
            _, lens, _ = edge_vectors(topo, q[:3 * n].reshape(n, 3))
            strain = np.abs(lens / rest.rest_edge_len - 1.0)[topo.rigid_edge]
            self.max_rigid_strain = max(self.max_rigid_strain, strain.max())
        return True

    def step(self) -> SimState:
        """Advance by one nominal time step, halving dt internally on
        Newton failure (up to max_halvings) and restoring it after
        recovery_steps clean steps."""
        cfg = self.config
        self.newton_iters_last = 0
        remaining = cfg.dt
        target = self.state.t + cfg.dt
        while remaining > 1e-12 * cfg.dt:
            dt = min(cfg.dt / 2 ** self._halvings, remaining)
            if self._solve_substep(dt):
                remaining = target - self.state.t
                self._steps_since_failure += 1
                if self._halvings and self._steps_since_failure >= cfg.recovery_steps:
                    self._halvings -= 1
                    self._steps_since_failure = 0
            else:
                self._halvings += 1
                self._steps_since_failure = 0
                if self._halvings > cfg.max_halvings:
                    raise SolverError(
                        f"Newton did not converge at dt={dt:.3e} after "
                        f"{cfg.max_halvings} halvings (t={self.state.t:.3f}s)")
        return self.state


def step(topology: RobotTopology, state: SimState, config: StepperConfig,
         material: elastic.MaterialParams, environment,
         undeformed: UndeformedConfig, omega_T: float = 0.0) -> SimState:
    """One implicit step of size config.dt (functional convenience wrapper)."""
    stepper = Stepper(topology, state, undeformed, material, environment,
                      config, omega_T)
    return stepper.step()


class MotionTracker:
    """Per-step kinematic samples used for metrics and trajectory logs."""

    def __init__(self, topology: RobotTopology, state: SimState):
        self.topology = topology
        n = topology.n_nodes
        x = state.positions(n)
        if topology.head_edge is not None:
            self._axis0 = -state.tangent[topology.head_edge]
        else:
            self._axis0 = -state.tangent[0]
        # lab-frame basis perpendicular to the initial axis, for azimuths
        trial = np.array([1.0, 0.0, 0.0])
        if abs(trial @ self._axis0) > 0.9:
            trial = np.array([0.0, 0.0, 1.0])
        self._b1 = trial - (trial @ self._axis0) * self._axis0
        self._b1 /= np.linalg.norm(self._b1)
        self._b2 = np.cross(self._axis0, self._b1)
        self._flag_nodes = (np.concatenate(topology.flagella_nodes)
                            if topology.flagella_nodes else np.array([], int))
        self._phi = self._azimuths(x)
        self.times = [state.t]
        self.head_pos = [self._head_position(x)]
        self.theta0 = [self._theta0(state)]
        self.mean_phi = [float(self._phi.mean()) if len(self._phi) else 0.0]
        self.axis = [self._current_axis(state)]

    def _head_position(self, x):
        i = self.topology.head_node if self.topology.head_node is not None else 0
        return x[i].copy()

    def _theta0(self, state):
        if self.topology.head_edge is None:
            return 0.0
        return float(state.q[self.topology.theta_index(self.topology.head_edge)])

    def _current_axis(self, state):
        k = self.topology.head_edge if self.topology.head_edge is not None else 0
        a = -state.tangent[k]
        return a / np.linalg.norm(a)

    def _azimuths(self, x):
        if len(self._flag_nodes) == 0:
            return np.zeros(0)
        centre = x[self.topology.joint_node] if self.topology.joint_node is not None \
            else x[0]
        r = x[self._flag_nodes] - centre
        return np.arctan2(r @ self._b2, r @ self._b1)

    def sample(self, state: SimState):
        x = state.positions(self.topology.n_nodes)
        phi = self._azimuths(x)
        if len(phi):
            # unwrap against the previous step; per-step turns are small
            self._phi += np.mod(phi - self._phi + np.pi, 2.0 * np.pi) - np.pi
        self.times.append(state.t)
        self.head_pos.append(self._head_position(x))
        self.theta0.append(self._theta0(state))
        self.mean_phi.append(float(self._phi.mean()) if len(phi) else 0.0)
        self.axis.append(self._current_axis(state))

    def window_metrics(self, i0: int, i1: int):
        """Average speed and rotation rates between sample indices i0, i1.

        Both rates are signed about the forward propulsion axis; the twist
        angle is measured about the head-edge tangent (the reversed axis),
        hence the sign flip.
        """
        dt = self.times[i1] - self.times[i0]
        axis = self.axis[i1]
        v = float((self.head_pos[i1] - self.head_pos[i0]) @ axis / dt)
        omega_h = -(self.theta0[i1] - self.theta0[i0]) / dt
        omega_t = (self.mean_phi[i1] - self.mean_phi[i0]) / dt
        return v, omega_h, omega_t


def _rel_change(cur, prev, floor):
    return abs(cur - prev) / max(abs(prev), floor)


def run_to_steady(stepper: Stepper, max_time: float = 60.0,
                  rel_change: float = 0.01, window: float | None = None,
                  min_window: float = 0.25,
                  max_window: float = 15.0) -> LocomotionMetrics:
    """Integrate until windowed averages of (v, omega_h, omega_t) settle.

    Window length tracks one flagellar revolution (clipped to
    [min_window, max_window]); steady state is declared when all three
    averages change by less than ``rel_change`` between consecutive
    windows.  Returns metrics with ``steady=False`` if ``max_time`` of
    simulated time elapses first.
    """
    topo = stepper.topology
    tracker = MotionTracker(topo, stepper.state)
    omega_T = abs(stepper.omega_T)
    if window is not None:
        win = window
    elif omega_T > 0.0:
        win = float(np.clip(2.0 * np.pi / omega_T, min_window, max_window))
    else:
        win = min_window

    prev = None
    last_idx = 0
    window_end = stepper.state.t + win
    v = omega_h = omega_t = 0.0
    # floors keep the relative-change test meaningful near zero rates
    v_floor = 1e-9
    w_floor = max(1e-6, 1e-4 * omega_T)

    while stepper.state.t < max_time - 1e-9:
        stepper.step()
        tracker.sample(stepper.state)
        if stepper.state.t + 1e-9 < window_end:
            continue
        i1 = len(tracker.times) - 1
        v, omega_h, omega_t = tracker.window_metrics(last_idx, i1)
        if prev is not None:
            settled = (_rel_change(v, prev[0], v_floor) < rel_change
                       and _rel_change(omega_h, prev[1], w_floor) < rel_change
                       and _rel_change(omega_t, prev[2], w_floor) < rel_change)
            if settled:
                return LocomotionMetrics(v=v, omega_h=omega_h, omega_t=omega_t,
                                         steady=True, elapsed=stepper.state.t)
        prev = (v, omega_h, omega_t)
        last_idx = i1
        if abs(omega_t) > 1e-9:
            win = float(np.clip(2.0 * np.pi / abs(omega_t), min_window, max_window))
        window_end = stepper.state.t + win

    return LocomotionMetrics(v=v, omega_h=omega_h, omega_t=omega_t,
                             steady=False, elapsed=stepper.state.t)


def flagellar_thrust(stepper: Stepper, medium) -> float:
    """Mean per-flagellum drag force along the propulsion axis (N)."""
    from .media import flagellar_node_tangents, rft_node_force

    topo, state, rest = stepper.topology, stepper.state, stepper.rest
    n = topo.n_nodes
    x = state.positions(n)
    vel = state.u[:3 * n].reshape(n, 3)
    drag_nodes = np.flatnonzero(rest.node_drag_len > 0.0)
    tangents = flagellar_node_tangents(topo, x)
    f = rft_node_force(vel[drag_nodes], tangents[drag_nodes],
                       rest.node_drag_len[drag_nodes], medium)
    k = topo.head_edge if topo.head_edge is not None else 0
    axis = -state.tangent[k]
    return float(np.sum(f @ axis) / max(topo.flagella_count, 1))


def tip_deflection(topology: RobotTopology, state: SimState) -> float:
    """Mean lateral offset of the flagella tips from their root axis line (m)."""
    x = state.positions(topology.n_nodes)
    k = topology.head_edge if topology.head_edge is not None else 0
    axis = -state.tangent[k]
    offsets = []
    for i, tip in enumerate(topology.flagella_tips):
        first = int(topology.flagella_nodes[i][0])
        edge = np.flatnonzero(topology.edges[:, 1] == first)[0]
        root = topology.edges[edge, 0]
        r = x[tip] - x[root]
        offsets.append(np.linalg.norm(r - (r @ axis) * axis))
    return float(np.mean(offsets))


def simulate(stepper: Stepper, duration: float,
             output_interval: float | None = None) -> list[TrajectoryRecord]:
    """Run for a fixed duration, logging one record per output interval."""
    if output_interval is None:
        output_interval = 10 * stepper.config.dt
    topo = stepper.topology
    tracker = MotionTracker(topo, stepper.state)
    records = []
    t_end = stepper.state.t + duration
    next_out = stepper.state.t + output_interval
    last_idx = 0
    iters = 0
    while stepper.state.t < t_end - 1e-9:
        stepper.step()
        iters += stepper.newton_iters_last
        tracker.sample(stepper.state)
        if stepper.state.t + 1e-9 >= next_out:
            i1 = len(tracker.times) - 1
            v, omega_h, omega_t = tracker.window_metrics(last_idx, i1)
            pos = tracker.head_pos[i1]
            records.append(TrajectoryRecord(
                t=stepper.state.t, x=pos[0], y=pos[1], z=pos[2], v=v,
                omega_h=omega_h, omega_t=omega_t, newton_iters=iters))
            last_idx = i1
            iters = 0
            next_out += output_interval
    return records
