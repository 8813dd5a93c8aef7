"""Reduced beam-theory model of a rotating flagellum in the medium.

Each flagellum is a cantilever clamped at the plate: rotation at rate
omega_t sweeps every material point at speed v = omega_t * R_d, the
anisotropic drag loads the beam azimuthally, and the deflected shape
produces a forward thrust component.  Three regimes are supported:

* ``LB``           linear beam, closed-form deflection under uniform load;
* ``NLB``          nonlinear beam, fourth-order BVP with the head speed
                   entering both the load and the thrust;
* ``NLB_NO_HEAD``  nonlinear beam with the head speed dropped from the
                   beam equation (the default for speed predictions).

The force and torque balance with the head closes the model: the thrust
of n flagella balances the head drag, their azimuthal drag torque
balances the head torque, and the motor rate splits as
omega_T = omega_h + omega_t.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .media import MediumParams


class Regime(enum.Enum):
    LB = "lb"
    NLB = "nlb"
    NLB_NO_HEAD = "nlb_no_head"

    @classmethod
    def parse(cls, text: str) -> "Regime":
        key = text.strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {"lb": cls.LB, "nlb": cls.NLB, "nlb_no_head": cls.NLB_NO_HEAD,
                   "nlb_without_head": cls.NLB_NO_HEAD}
        if key not in aliases:
            raise ValueError(f"unknown beam regime {text!r}")
        return aliases[key]


@dataclass
class BeamProblem:
    """One flagellum's beam problem (SI units)."""

    L: float                      # flagellum length (m)
    EI: float                     # bending stiffness (N m^2)
    eta_t: float                  # tangential drag coefficient
    eta_p: float                  # perpendicular drag coefficient
    R_d: float                    # attachment radius (m)
    omega_t: float = 0.0          # flagellar rotation rate (rad/s)
    v_h: float = 0.0              # head translation speed (m/s)
    regime: Regime = Regime.NLB_NO_HEAD
    M: int = 257                  # collocation points (odd, >= 33)

    def __post_init__(self):
        if self.L <= 0.0 or self.EI <= 0.0:
            raise ValueError("L and EI must be positive")
        if self.M < 32:
            raise ValueError("need at least 32 collocation points")
        if self.M % 2 == 0:
            self.M += 1          # composite Simpson needs an odd grid

    @classmethod
    def from_robot(cls, L: float, EI: float, medium: MediumParams,
                   **kwargs) -> "BeamProblem":
        return cls(L=L, EI=EI, eta_t=medium.eta_t, eta_p=medium.eta_p,
                   R_d=medium.R_d, **kwargs)


@dataclass
class BeamSolution:
    """Deflection samples and the forces/rates derived from them."""

    y: np.ndarray                 # grid (m)
    w: np.ndarray                 # deflection (m)
    w_prime: np.ndarray           # slope
    w_2: np.ndarray               # second derivative (1/m)
    w_3: np.ndarray               # third derivative (1/m^2)
    F_x: float                    # azimuthal drag force per flagellum (N)
    F_p: float                    # propulsive force per flagellum (N)
    v_h: float                    # head speed from force balance (m/s)
    omega_h: float                # head rotation rate from torque balance (rad/s)
    omega_t: float                # flagellar rotation rate (rad/s)
    regime: Regime
    residual_norm: float          # converged collocation residual (scaled units)
    bc_residual: float            # worst boundary-condition violation (scaled)

    @property
    def tip_deflection(self) -> float:
        return float(self.w[-1])


def lb_load(problem: BeamProblem) -> float:
    """Uniform azimuthal load of the linear regime, eta_p * omega_t * R_d."""
    return problem.eta_p * problem.omega_t * problem.R_d


def lb_deflection(y, problem: BeamProblem):
    """Closed-form cantilever deflection p_t y^2 (6L^2 - 4Ly + y^2) / (24 EI)."""
    y = np.asarray(y, dtype=float)
    L, EI = problem.L, problem.EI
    return lb_load(problem) * y ** 2 * (6 * L ** 2 - 4 * L * y + y ** 2) / (24 * EI)


def lb_slope(y, problem: BeamProblem):
    y = np.asarray(y, dtype=float)
    L, EI = problem.L, problem.EI
    return lb_load(problem) * y * (3 * L ** 2 - 3 * L * y + y ** 2) / (6 * EI)


def lb_forces(problem: BeamProblem):
    """Total azimuthal and propulsive force per flagellum in the LB regime."""
    L = problem.L
    F_x = lb_load(problem) * L
    w_L = lb_deflection(L, problem)
    F_p = ((problem.eta_p - problem.eta_t) * problem.omega_t * problem.R_d * w_L
           - problem.eta_t * problem.v_h * L)
    return float(F_x), float(F_p)


def _load_per_length(problem: BeamProblem, slope, v_h: float):
    """Azimuthal load p(w') of the nonlinear beam equation."""
    v = problem.omega_t * problem.R_d
    s2 = slope ** 2
    return problem.eta_p * v + (problem.eta_t - problem.eta_p) \
        * (v * s2 + v_h * slope) / (s2 + 1.0)


def _load_slope_derivative(problem: BeamProblem, slope, v_h: float):
    v = problem.omega_t * problem.R_d
    s2 = slope ** 2
    return (problem.eta_t - problem.eta_p) \
        * (2.0 * v * slope + v_h * (1.0 - s2)) / (s2 + 1.0) ** 2


def _lb_warm_start(problem: BeamProblem) -> np.ndarray:
    """Scaled state (w/L, w', L w'', L^2 w''') of the closed-form solution."""
    L, EI = problem.L, problem.EI
    s = np.linspace(0.0, 1.0, problem.M)
    p_hat = lb_load(problem) * L ** 3 / EI
    U = np.empty((problem.M, 4))
    U[:, 0] = p_hat * s ** 2 * (6.0 - 4.0 * s + s ** 2) / 24.0
    U[:, 1] = p_hat * s * (3.0 - 3.0 * s + s ** 2) / 6.0
    U[:, 2] = p_hat * (1.0 - s) ** 2 / 2.0
    U[:, 3] = -p_hat * (1.0 - s)
    return U


def _collocation_residual(U, h, g_func):
    """MIRK4 (Simpson/Hermite) residuals of u' = f(u) plus the four BCs."""
    f = np.empty_like(U)
    f[:, 0] = U[:, 1]
    f[:, 1] = U[:, 2]
    f[:, 2] = U[:, 3]
    f[:, 3] = g_func(U[:, 1])
    fm_arg = 0.5 * (U[:-1] + U[1:]) - (h / 8.0) * (f[1:] - f[:-1])
    fm = np.empty_like(fm_arg)
    fm[:, 0] = fm_arg[:, 1]
    fm[:, 1] = fm_arg[:, 2]
    fm[:, 2] = fm_arg[:, 3]
    fm[:, 3] = g_func(fm_arg[:, 1])
    R_int = U[1:] - U[:-1] - (h / 6.0) * (f[:-1] + 4.0 * fm + f[1:])
    R = np.concatenate([[U[0, 0], U[0, 1]], R_int.ravel(),
                        [U[-1, 2], U[-1, 3]]])
    return R, f, fm_arg


def _system_matrix(U, h, f, fm_arg, g_prime):
    """Sparse Jacobian of the collocation system."""
    M = U.shape[0]

    def a_mat(u1_col):
        n = len(u1_col)
        A = np.zeros((n, 4, 4))
        A[:, 0, 1] = 1.0
        A[:, 1, 2] = 1.0
        A[:, 2, 3] = 1.0
        A[:, 3, 1] = g_prime(u1_col)
        return A

    A = a_mat(U[:, 1])
    Am = a_mat(fm_arg[:, 1])
    eye = np.eye(4)
    dm_di = 0.5 * eye + (h / 8.0) * A[:-1]
    dm_dj = 0.5 * eye - (h / 8.0) * A[1:]
    dR_di = -eye - (h / 6.0) * (A[:-1] + 4.0 * np.einsum("nij,njk->nik", Am, dm_di))
    dR_dj = eye - (h / 6.0) * (A[1:] + 4.0 * np.einsum("nij,njk->nik", Am, dm_dj))

    # boundary rows: w(0) = 0, w'(0) = 0 at the top; w''(L) = w'''(L) = 0 below
    r_local = np.repeat(np.arange(4), 4)
    c_local = np.tile(np.arange(4), 4)
    i_idx = np.arange(M - 1)
    rows_blk = ((2 + 4 * i_idx)[:, None] + r_local).ravel()
    cols_i = ((4 * i_idx)[:, None] + c_local).ravel()
    cols_j = ((4 * (i_idx + 1))[:, None] + c_local).ravel()
    nr = 2 + 4 * (M - 1)
    rows = np.concatenate([[0, 1], rows_blk, rows_blk, [nr, nr + 1]])
    cols = np.concatenate([[0, 1], cols_i, cols_j,
                           [4 * (M - 1) + 2, 4 * (M - 1) + 3]])
    vals = np.concatenate([[1.0, 1.0], dR_di.reshape(-1), dR_dj.reshape(-1),
                           [1.0, 1.0]])
    n = 4 * M
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()


def _solve_collocation(problem: BeamProblem, v_h: float,
                       warm: np.ndarray | None = None,
                       max_iter: int = 40):
    """Damped Newton on the scaled collocation system; returns (U, res_norm)."""
    L, EI = problem.L, problem.EI
    scale = L ** 3 / EI

    def g_func(slope):
        return scale * _load_per_length(problem, slope, v_h)

    def g_prime(slope):
        return scale * _load_slope_derivative(problem, slope, v_h)

    U = _lb_warm_start(problem) if warm is None else warm.copy()
    h = 1.0 / (problem.M - 1)
    R, f, fm_arg = _collocation_residual(U, h, g_func)
    best = np.abs(R).max()
    tol = 1e-11 * max(1.0, h * np.abs(f).max())
    for _ in range(max_iter):
        if best < tol:
            break
        J = _system_matrix(U, h, f, fm_arg, g_prime)
        dU = spla.spsolve(J, R).reshape(-1, 4)
        lam = 1.0
        while lam > 2 ** -12:
            U_try = U - lam * dU
            R_try, f_try, fm_try = _collocation_residual(U_try, h, g_func)
            if np.abs(R_try).max() < best:
                U, R, f, fm_arg = U_try, R_try, f_try, fm_try
                best = np.abs(R).max()
                break
            lam *= 0.5
        else:
            return None, best
    else:
        if best >= tol:
            return None, best
    return U, best


def _solution_from_grid(problem: BeamProblem, U: np.ndarray, res_norm: float,
                        v_h_beam: float) -> BeamSolution:
    L = problem.L
    y = np.linspace(0.0, L, problem.M)
    bc = max(abs(U[0, 0]), abs(U[0, 1]), abs(U[-1, 2]), abs(U[-1, 3]))
    sol = BeamSolution(
        y=y, w=U[:, 0] * L, w_prime=U[:, 1].copy(), w_2=U[:, 2] / L,
        w_3=U[:, 3] / L ** 2, F_x=0.0, F_p=0.0, v_h=v_h_beam,
        omega_h=0.0, omega_t=problem.omega_t, regime=problem.regime,
        residual_norm=float(res_norm), bc_residual=float(bc))
    sol.F_x, sol.F_p = propulsion_integrals(sol, replace(problem, v_h=v_h_beam))
    return sol


def nlb_solve(problem: BeamProblem,
              warm_start: BeamSolution | None = None) -> BeamSolution:
    """Solve the nonlinear cantilever BVP

        EI w'''' = p(w'),  w(0) = w'(0) = 0,  w''(L) = w'''(L) = 0

    by fourth-order collocation on a uniform grid with damped Newton and a
    linear-beam warm start.  If Newton diverges, the rotation rate is
    ramped up geometrically from a converged fraction (continuation).
    """
    v_h = 0.0 if problem.regime is Regime.NLB_NO_HEAD else problem.v_h
    warm = None
    if warm_start is not None and len(warm_start.w) == problem.M:
        warm = np.column_stack([
            warm_start.w / problem.L, warm_start.w_prime,
            warm_start.w_2 * problem.L, warm_start.w_3 * problem.L ** 2])

    U, res = _solve_collocation(problem, v_h, warm)
    if U is None:
        U = _continuation_solve(problem, v_h)
        U, res = _solve_collocation(problem, v_h, U)
        if U is None:
            raise SolverError("beam collocation did not converge "
                              f"(omega_t={problem.omega_t:.4g} rad/s)")
    return _solution_from_grid(problem, U, res, v_h)


def _continuation_solve(problem: BeamProblem, v_h: float) -> np.ndarray:
    """Ramp omega_t up from a small value, reusing each converged solution."""
    for k in range(1, 12):
        frac = 2.0 ** -k
        sub = replace(problem, omega_t=frac * problem.omega_t)
        U, _ = _solve_collocation(sub, frac * v_h)
        if U is None:
            continue
        while frac < 1.0:
            frac = min(1.0, frac * 1.5)
            sub = replace(problem, omega_t=frac * problem.omega_t)
            U_next, _ = _solve_collocation(sub, frac * v_h, U)
            if U_next is None:
                break
            U = U_next
        else:
            return U
        if frac >= 1.0:
            return U
    raise SolverError("beam continuation failed "
                      f"(omega_t={problem.omega_t:.4g} rad/s)")


def _simpson(values: np.ndarray, h: float) -> float:
    weights = np.ones(len(values))
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.sum(weights * values))


def propulsion_integrals(solution: BeamSolution, problem: BeamProblem):
    """Integrate the azimuthal and propulsive force densities over the beam.

    Uses composite Simpson on the collocation grid; the head speed enters
    through ``problem.v_h`` (zero in the no-head regime).
    """
    slope = solution.w_prime
    root = np.sqrt(1.0 + slope ** 2)
    sin_th = slope / root
    cos_th = 1.0 / root
    v = problem.omega_t * problem.R_d
    v_h = 0.0 if problem.regime is Regime.NLB_NO_HEAD else problem.v_h
    et, ep = problem.eta_t, problem.eta_p

    p_t = ep * v + (et - ep) * v * sin_th ** 2
    q = (ep - et) * (v * sin_th * cos_th + v_h * cos_th ** 2) - ep * v_h
    h = solution.y[1] - solution.y[0]
    return _simpson(p_t, h), _simpson(q, h)


def head_balance(F_p: float, F_x: float, n: int, medium: MediumParams):
    """Head speed and rotation rate balancing n flagella's thrust and torque."""
    v_h = n * F_p / medium.head_drag_coeff
    omega_h = n * medium.R_d * F_x / medium.head_torque_coeff
    return float(v_h), float(omega_h)


def solve_tail(problem: BeamProblem, n: int, medium: MediumParams,
               warm_start: BeamSolution | None = None) -> BeamSolution:
    """Solve one flagellum at fixed omega_t and close the head balance.

    In the NLB regime the head speed feeds back into the beam load, so a
    fixed-point loop re-solves until v_h settles below 1e-8 m/s.
    """
    if problem.regime is Regime.LB:
        y = np.linspace(0.0, problem.L, problem.M)
        # F_p depends linearly on v_h, so the force balance solves exactly
        F_x = lb_load(problem) * problem.L
        thrust = ((problem.eta_p - problem.eta_t) * problem.omega_t
                  * problem.R_d * lb_deflection(problem.L, problem))
        v_h = n * thrust / (medium.head_drag_coeff
                            + n * problem.eta_t * problem.L)
        F_p = thrust - problem.eta_t * v_h * problem.L
        _, omega_h = head_balance(F_p, F_x, n, medium)
        sol = BeamSolution(
            y=y, w=lb_deflection(y, problem), w_prime=lb_slope(y, problem),
            w_2=lb_load(problem) * (problem.L - y) ** 2 / (2 * problem.EI),
            w_3=-lb_load(problem) * (problem.L - y) / problem.EI,
            F_x=F_x, F_p=F_p, v_h=v_h, omega_h=omega_h,
            omega_t=problem.omega_t, regime=problem.regime,
            residual_norm=0.0, bc_residual=0.0)
        return sol

    if problem.regime is Regime.NLB_NO_HEAD:
        sol = nlb_solve(problem, warm_start)
        sol.v_h, sol.omega_h = head_balance(sol.F_p, sol.F_x, n, medium)
        return sol

    # NLB with head feedback
    v_h = problem.v_h
    sol = None
    for _ in range(200):
        prob = replace(problem, v_h=v_h)
        sol = nlb_solve(prob, warm_start or sol)
        v_new, omega_h = head_balance(sol.F_p, sol.F_x, n, medium)
        sol.omega_h = omega_h
        if abs(v_new - v_h) < 1e-8:
            sol.v_h = v_new
            return sol
        v_h = 0.5 * (v_h + v_new)      # damped update
    raise SolverError("head-speed fixed point did not converge")


def split_omega(omega_T: float, n: int, template: BeamProblem,
                medium: MediumParams, x0: float | None = None) -> BeamSolution:
    """Split the motor rate into flagellar and head rotation.

    Root-finds g(omega_t) = omega_t + omega_h(omega_t) - omega_T on
    [0, omega_T] by bisection plus a secant polish to |g| < 1e-10 omega_T.
    ``x0`` is an optional warm-start guess for the root (pure speedup).
    """
    if omega_T < 0.0:
        raise ValueError("omega_T must be nonnegative")
    if omega_T == 0.0:
        prob = replace(template, omega_t=0.0, v_h=0.0)
        return solve_tail(prob, n, medium)

    cache: dict[float, BeamSolution] = {}
    warm: list[BeamSolution | None] = [None]

    def g(omega_t: float) -> float:
        sol = solve_tail(replace(template, omega_t=omega_t, v_h=0.0), n,
                         medium, warm_start=warm[0])
        warm[0] = sol
        cache[omega_t] = sol
        return omega_t + sol.omega_h - omega_T

    tol = 1e-10 * omega_T

    def polish(a, b, ga, gb, lo, hi, max_iter=60):
        root, g_root = b, gb
        for _ in range(max_iter):
            if abs(g_root) < tol:
                return root
            if gb == ga:
                root = 0.5 * (a + b)
            else:
                root = b - gb * (b - a) / (gb - ga)
                if not (lo <= root <= hi):
                    root = 0.5 * (a + b)
            g_root = g(root)
            a, ga = b, gb
            b, gb = root, g_root
        return None

    if x0 is not None and 0.0 < x0 < omega_T:
        a = float(x0)
        ga = g(a)
        if abs(ga) < tol:
            return cache[a]
        b = min(a * 1.02 + 1e-4 * omega_T, omega_T)
        root = polish(a, b, ga, g(b), 0.0, omega_T, max_iter=12)
        if root is not None:
            sol = cache[root]
            assert abs(sol.omega_t + sol.omega_h - omega_T) <= max(tol, 1e-9 * omega_T)
            return sol

    lo, hi = 0.0, omega_T
    g_lo, g_hi = -omega_T, g(omega_T)
    if g_hi < 0.0:
        raise SolverError("no sign change in the motor-split bracket")
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if abs(g_mid) < tol:
            lo = hi = mid
            g_lo = g_hi = g_mid
            break
        if g_mid > 0.0:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid

    root = polish(lo, hi, g_lo, g_hi, lo, hi)
    if root is None:
        raise SolverError("motor-split root finding stalled")
    sol = cache[root]
    assert abs(sol.omega_t + sol.omega_h - omega_T) <= max(tol, 1e-9 * omega_T)
    return sol


def relaxation_time(problem: BeamProblem) -> float:
    """Elasto-viscous relaxation time eta_p L^4 / EI."""
    return problem.eta_p * problem.L ** 4 / problem.EI


def normalize_rate(omega, problem: BeamProblem):
    """Dimensionless rotation rate omega * eta_p L^4 / EI."""
    return omega * relaxation_time(problem)


def normalize_speed(v, problem: BeamProblem):
    """Dimensionless translation speed v * eta_p L^3 / EI."""
    return v * problem.eta_p * problem.L ** 3 / problem.EI
