"""Kinematics of the robot as a network of discrete rod segments.

The robot is a tree of nodes and straight edges: a two-edge head chain
(x0, x1, x2), rigid plate spokes from the joint node x2, and n elastic
flagella trailing parallel to the axis.  Each edge carries an orthonormal
reference frame {d1, d2, t}; the material frame is the reference frame
rotated about the tangent by the twist angle of that edge.

The DOF vector is ``q = [x0, x1, ..., x_{N-1}, theta^0, ..., theta^{Ne-1}]``
of length 3*N + Ne.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError

HEAD, PLATE, FLAGELLUM = 0, 1, 2


@dataclass
class RobotGeometry:
    """As-built dimensions of the robot (SI units)."""

    R_h: float            # head radius (m)
    L_p: float            # plate diameter (m); attachment radius R_d = L_p / 2
    n: int                # number of flagella
    L: float              # length of each flagellum (m)
    edge_len: float       # target flagellar edge length (m)

    @property
    def R_d(self) -> float:
        return 0.5 * self.L_p


@dataclass
class RobotTopology:
    """Connectivity of the rod network (immutable after build)."""

    n_nodes: int
    edges: np.ndarray              # (Ne, 2) ordered node pairs, e^k = x[b] - x[a]
    edge_kind: np.ndarray          # (Ne,) HEAD | PLATE | FLAGELLUM
    edge_flagellum: np.ndarray     # (Ne,) flagellum index, -1 for head/plate edges
    rigid_edge: np.ndarray         # (Ne,) bool
    springs: np.ndarray            # (Ns, 5) columns (node0, edge0, node1, edge1, node2)
    spring_rigid: np.ndarray       # (Ns,) bool, True if either edge is rigid
    flagella_count: int
    joint_node: int | None         # the "T"-joint (x2); None for a bare chain
    head_node: int | None          # head centre (x1), where head drag applies
    head_edge: int | None          # edge whose twist angle tracks the head spin
    actuation_spring: int | None   # spring whose rest twist is driven by the motor
    flagella_nodes: list[np.ndarray] = field(default_factory=list)
    flagella_tips: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_springs(self) -> int:
        return len(self.springs)

    @property
    def n_dof(self) -> int:
        return 3 * self.n_nodes + self.n_edges

    def node_degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)

    def theta_index(self, edge: int) -> int:
        return 3 * self.n_nodes + edge


@dataclass
class UndeformedConfig:
    """Rest strains of the network; the actuated rest twist varies in time."""

    rest_edge_len: np.ndarray      # (Ne,)
    rest_kappa: np.ndarray         # (Ns, 2) material curvatures as built
    rest_twist: np.ndarray         # (Ns,)
    voronoi_len: np.ndarray        # (Ns,) half-sum of adjacent rest edge lengths
    node_drag_len: np.ndarray      # (N,) flagellar Voronoi length per node (0 off-flagellum)

    def copy(self) -> "UndeformedConfig":
        return UndeformedConfig(
            self.rest_edge_len.copy(), self.rest_kappa.copy(),
            self.rest_twist.copy(), self.voronoi_len.copy(),
            self.node_drag_len.copy())


@dataclass
class SimState:
    """Degrees of freedom plus the per-edge reference frames they depend on.

    Invariant: ``tangent``, ``d1``, ``d2`` are consistent with the node
    positions stored in ``q`` (enforced by :func:`update_frames`).
    """

    q: np.ndarray                  # (3N + Ne,)
    u: np.ndarray                  # (3N + Ne,) velocities
    d1: np.ndarray                 # (Ne, 3) reference directors
    d2: np.ndarray                 # (Ne, 3)
    tangent: np.ndarray            # (Ne, 3)
    ref_twist: np.ndarray          # (Ns,) reference twist per spring
    t: float = 0.0

    def positions(self, n_nodes: int) -> np.ndarray:
        return self.q[: 3 * n_nodes].reshape(n_nodes, 3)

    def thetas(self, n_nodes: int) -> np.ndarray:
        return self.q[3 * n_nodes:]

    def copy(self) -> "SimState":
        return SimState(self.q.copy(), self.u.copy(), self.d1.copy(),
                        self.d2.copy(), self.tangent.copy(),
                        self.ref_twist.copy(), self.t)


def cross3(a, b):
    """Cross product over the last axis (faster than np.cross for small batches)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    out[..., 0] = a1 * b2 - a2 * b1
    out[..., 1] = a2 * b0 - a0 * b2
    out[..., 2] = a0 * b1 - a1 * b0
    return out


def parallel_transport(v, t_from, t_to):
    """Rotate ``v`` by the minimal rotation taking ``t_from`` onto ``t_to``.

    Accepts single vectors or (n, 3) batches.  Raises
    :class:`DegenerateGeometryError` for antiparallel tangents, where the
    minimal rotation is undefined.
    """
    v = np.asarray(v, dtype=float)
    t_from = np.asarray(t_from, dtype=float)
    t_to = np.asarray(t_to, dtype=float)
    c = np.sum(t_from * t_to, axis=-1)
    if np.any(c <= -1.0 + 1e-12):
        raise DegenerateGeometryError("antiparallel tangents in parallel transport")
    axis = cross3(t_from, t_to)
    av = np.sum(axis * v, axis=-1)
    return (c[..., None] * v + cross3(axis, v)
            + (av / (1.0 + c))[..., None] * axis)


def signed_angle(u, v, axis):
    """Angle from ``u`` to ``v`` about ``axis`` (batched, radians in (-pi, pi])."""
    w = cross3(u, v)
    s = np.sum(w * axis, axis=-1)
    cden = np.sum(np.asarray(u) * np.asarray(v), axis=-1)
    return np.arctan2(s, cden)


def _orthonormalize(d1, t):
    d1 = d1 - np.sum(d1 * t, axis=-1, keepdims=True) * t
    d1 = d1 / np.linalg.norm(d1, axis=-1, keepdims=True)
    return d1, cross3(t, d1)


def edge_vectors(topology: RobotTopology, x: np.ndarray):
    e = x[topology.edges[:, 1]] - x[topology.edges[:, 0]]
    lengths = np.linalg.norm(e, axis=1)
    if np.any(lengths <= 0.0):
        raise DegenerateGeometryError("collapsed edge")
    return e, lengths, e / lengths[:, None]


def material_frames(state: SimState, n_nodes: int):
    """Material directors m1, m2 from reference frames and twist angles."""
    theta = state.thetas(n_nodes)
    ct, st = np.cos(theta)[:, None], np.sin(theta)[:, None]
    m1 = ct * state.d1 + st * state.d2
    m2 = -st * state.d1 + ct * state.d2
    return m1, m2


def compute_ref_twist(topology: RobotTopology, d1: np.ndarray,
                      tangent: np.ndarray, guess: np.ndarray) -> np.ndarray:
    """Reference twist per spring: angle mismatch between the space-parallel
    transport of the first edge's director across the joint and the second
    edge's director.  Unwrapped to the 2*pi branch nearest ``guess``."""
    ea = topology.springs[:, 1]
    eb = topology.springs[:, 3]
    moved = parallel_transport(d1[ea], tangent[ea], tangent[eb])
    raw = signed_angle(moved, d1[eb], tangent[eb])
    return raw + 2.0 * np.pi * np.round((guess - raw) / (2.0 * np.pi))


def update_frames(topology: RobotTopology, state: SimState) -> SimState:
    """Bring reference frames and reference twists in line with ``state.q``.

    ``state.d1``/``state.tangent`` must hold the previous configuration's
    frames; each frame is time-parallel transported to the new tangent and
    re-orthonormalized (one Gram-Schmidt pass, preventing drift over long
    runs).  Mutates and returns ``state``.
    """
    x = state.positions(topology.n_nodes)
    _, _, t_new = edge_vectors(topology, x)
    d1 = parallel_transport(state.d1, state.tangent, t_new)
    d1, d2 = _orthonormalize(d1, t_new)
    state.d1, state.d2, state.tangent = d1, d2, t_new
    state.ref_twist = compute_ref_twist(topology, d1, t_new, state.ref_twist)
    return state


def _space_seed_frames(topology: RobotTopology, tangent: np.ndarray) -> np.ndarray:
    """Seed d1 on every edge by space-parallel transport over the edge tree."""
    ne = topology.n_edges
    d1 = np.zeros((ne, 3))
    t0 = tangent[0]
    trial = np.array([0.0, 0.0, 1.0])
    if abs(trial @ t0) > 0.9:
        trial = np.array([1.0, 0.0, 0.0])
    d1[0] = trial - (trial @ t0) * t0
    d1[0] /= np.linalg.norm(d1[0])

    node_edges: list[list[int]] = [[] for _ in range(topology.n_nodes)]
    for k, (a, b) in enumerate(topology.edges):
        node_edges[a].append(k)
        node_edges[b].append(k)
    seen = {0}
    stack = [0]
    while stack:
        k = stack.pop()
        for node in topology.edges[k]:
            for j in node_edges[node]:
                if j not in seen:
                    d1[j] = parallel_transport(d1[k], tangent[k], tangent[j])
                    seen.add(j)
                    stack.append(j)
    return d1


def _chain_springs(node_chain, edge_chain):
    """Interior bend/twist spring tuples along a simple chain."""
    out = []
    for i in range(len(edge_chain) - 1):
        out.append((node_chain[i], edge_chain[i], node_chain[i + 1],
                    edge_chain[i + 1], node_chain[i + 2]))
    return out


def build_robot(geometry: RobotGeometry):
    """Discretize the robot; returns (RobotTopology, SimState, UndeformedConfig).

    Head nodes x0, x1, x2 lie on the axis (x1 is the head centre, x2 the
    joint); one rigid plate spoke per flagellum runs from x2 to radius R_d,
    and each flagellum is a straight chain of round(L / edge_len) uniform
    edges parallel to the axis.  The assembled state is stress free.
    """
    g = geometry
    if g.n < 2:
        raise ValueError("flagella count must be >= 2")
    if min(g.L, g.R_h, g.L_p, g.edge_len) <= 0.0:
        raise ValueError("geometry dimensions must be positive")
    if g.edge_len > g.L / 4.0:
        raise ValueError("edge length > L/4 is too coarse to bend")

    # The attachment node sits half an edge ahead of the plate plane and the
    # first flagellar node half an edge behind it: the rigid root spring then
    # clamps the flagellum exactly at the plate, so the discrete cantilever
    # converges quadratically in the edge length.  The tip lands at L.
    n_flag_edges = max(4, int(round(g.L / g.edge_len)))
    ds = g.L / (n_flag_edges - 0.5)
    axis = np.array([0.0, 1.0, 0.0])   # flagella trail along +y; robot swims along -y

    nodes = [np.array([0.0, -2.0 * g.R_h, 0.0]),   # x0 head tip
             np.array([0.0, -g.R_h, 0.0]),         # x1 head centre
             np.array([0.0, 0.0, 0.0])]            # x2 joint
    edges = [(0, 1), (1, 2)]
    kind = [HEAD, HEAD]
    flag_of = [-1, -1]

    springs = _chain_springs([0, 1, 2], [0, 1])    # head interior spring at x1
    flagella_nodes = []
    tips = []
    for i in range(g.n):
        phi = 2.0 * np.pi * i / g.n
        radial = np.array([np.cos(phi), 0.0, np.sin(phi)])
        plate_node = len(nodes)
        nodes.append(g.R_d * radial - 0.5 * ds * axis)
        plate_edge = len(edges)
        edges.append((2, plate_node))
        kind.append(PLATE)
        flag_of.append(-1)
        springs.append((1, 1, 2, plate_edge, plate_node))   # head-plate pair at x2

        chain_nodes = [2, plate_node]
        chain_edges = [plate_edge]
        for j in range(1, n_flag_edges + 1):
            node = len(nodes)
            nodes.append(g.R_d * radial + (j - 0.5) * ds * axis)
            chain_edges.append(len(edges))
            edges.append((chain_nodes[-1], node))
            kind.append(FLAGELLUM)
            flag_of.append(i)
            chain_nodes.append(node)
        springs.extend(_chain_springs(chain_nodes, chain_edges))
        flagella_nodes.append(np.array(chain_nodes[2:], dtype=int))
        tips.append(chain_nodes[-1])

    edges = np.array(edges, dtype=int)
    kind = np.array(kind, dtype=int)
    springs = np.array(springs, dtype=int)
    rigid = kind != FLAGELLUM
    spring_rigid = rigid[springs[:, 1]] | rigid[springs[:, 3]]
    topo = RobotTopology(
        n_nodes=len(nodes), edges=edges, edge_kind=kind,
        edge_flagellum=np.array(flag_of, dtype=int), rigid_edge=rigid,
        springs=springs, spring_rigid=spring_rigid, flagella_count=g.n,
        joint_node=2, head_node=1, head_edge=0, actuation_spring=0,
        flagella_nodes=flagella_nodes, flagella_tips=np.array(tips, dtype=int))

    x = np.array(nodes)
    state, rest = _assemble_rest_state(topo, x)
    return topo, state, rest


def build_chain(length: float, n_edges: int, direction=(0.0, 1.0, 0.0),
                origin=(0.0, 0.0, 0.0)):
    """A bare straight rod with the same data layout as the robot.

    Useful for single-rod verification problems (cantilevers etc.); every
    edge is tagged as flagellum 0 so drag lengths cover the whole rod.
    """
    if n_edges < 2:
        raise ValueError("need at least two edges")
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    ds = length / n_edges
    x = np.asarray(origin, dtype=float) + np.outer(np.arange(n_edges + 1) * ds, direction)
    edges = np.column_stack([np.arange(n_edges), np.arange(1, n_edges + 1)])
    springs = np.array(_chain_springs(list(range(n_edges + 1)), list(range(n_edges))),
                       dtype=int)
    topo = RobotTopology(
        n_nodes=n_edges + 1, edges=edges,
        edge_kind=np.full(n_edges, FLAGELLUM, dtype=int),
        edge_flagellum=np.zeros(n_edges, dtype=int),
        rigid_edge=np.zeros(n_edges, dtype=bool),
        springs=springs, spring_rigid=np.zeros(len(springs), dtype=bool),
        flagella_count=1, joint_node=None, head_node=None, head_edge=None,
        actuation_spring=None,
        flagella_nodes=[np.arange(1, n_edges + 1)],
        flagella_tips=np.array([n_edges], dtype=int))
    state, rest = _assemble_rest_state(topo, x)
    return topo, state, rest


def _assemble_rest_state(topo: RobotTopology, x: np.ndarray):
    _, lengths, tangent = edge_vectors(topo, x)
    d1 = _space_seed_frames(topo, tangent)
    d1, d2 = _orthonormalize(d1, tangent)

    q = np.concatenate([x.ravel(), np.zeros(topo.n_edges)])
    state = SimState(q=q, u=np.zeros_like(q), d1=d1, d2=d2, tangent=tangent,
                     ref_twist=np.zeros(topo.n_springs), t=0.0)
    state.ref_twist = compute_ref_twist(topo, d1, tangent,
                                        np.zeros(topo.n_springs))

    # Rest curvatures from the as-built shape so the assembly is stress free
    # (right-angle joints included); theta = 0 so material frames = reference.
    e = x[topo.edges[:, 1]] - x[topo.edges[:, 0]]
    ea, eb = topo.springs[:, 1], topo.springs[:, 3]
    kb = curvature_binormal(e[ea], e[eb])
    kappa1 = 0.5 * np.sum((d2[ea] + d2[eb]) * kb, axis=1)
    kappa2 = 0.5 * np.sum((d1[ea] + d1[eb]) * kb, axis=1)

    voronoi = 0.5 * (lengths[ea] + lengths[eb])
    drag_len = np.zeros(topo.n_nodes)
    for k in np.flatnonzero(topo.edge_kind == FLAGELLUM):
        a, b = topo.edges[k]
        drag_len[a] += 0.5 * lengths[k]
        drag_len[b] += 0.5 * lengths[k]
    # attachment nodes sit inside the plate: their half-edge is not wetted,
    # so the drag per flagellum integrates over exactly its length L
    rigid_touch = np.zeros(topo.n_nodes, dtype=bool)
    for k in np.flatnonzero(topo.rigid_edge):
        rigid_touch[topo.edges[k]] = True
    drag_len[rigid_touch] = 0.0

    rest = UndeformedConfig(
        rest_edge_len=lengths,
        rest_kappa=np.column_stack([kappa1, kappa2]),
        rest_twist=state.ref_twist.copy(),
        voronoi_len=voronoi,
        node_drag_len=drag_len)
    return state, rest


def curvature_binormal(e_prev, e_next):
    """Discrete curvature binormal 2 e x e' / (|e||e'| + e.e') (batched)."""
    e_prev = np.asarray(e_prev, dtype=float)
    e_next = np.asarray(e_next, dtype=float)
    denom = (np.linalg.norm(e_prev, axis=-1) * np.linalg.norm(e_next, axis=-1)
             + np.sum(e_prev * e_next, axis=-1))
    if np.any(denom <= 0.0):
        raise DegenerateGeometryError("antiparallel edges at a bending node")
    return 2.0 * cross3(e_prev, e_next) / denom[..., None]


def rotate_state(topology: RobotTopology, state: SimState, R: np.ndarray,
                 about=(0.0, 0.0, 0.0)) -> SimState:
    """Rigidly rotate positions and frames together (a gauge-consistent copy)."""
    about = np.asarray(about, dtype=float)
    x = state.positions(topology.n_nodes)
    out = state.copy()
    out.q[: 3 * topology.n_nodes] = ((x - about) @ R.T + about).ravel()
    out.d1 = state.d1 @ R.T
    out.d2 = state.d2 @ R.T
    out.tangent = state.tangent @ R.T
    return out
