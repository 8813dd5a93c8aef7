"""Scratch: spin up the design-1 robot and benchmark stepping."""
import time

import numpy as np

from flagsim.rod import RobotGeometry, build_robot
from flagsim.elastic import MaterialParams
from flagsim.media import MediumParams, RFTEnvironment
from flagsim.sim import Stepper, StepperConfig, run_to_steady

geom = RobotGeometry(R_h=0.02, L_p=0.04, n=2, L=0.111, edge_len=0.00411)
topo, state, rest = build_robot(geom)
print("nodes", topo.n_nodes, "ndof", topo.n_dof, "springs", topo.n_springs)

mat = MaterialParams.isotropic_rod(E=1.2e6, nu=0.5, r0=0.0032, density=1000.0)
med = MediumParams.from_friction(mu=6.828, C1=2.420, C2=0.039, R_h=0.02,
                                 R_d=0.02, L=0.111, r0=0.0032)
print("eta_t", med.eta_t, "eta_p", med.eta_p)

omega_T = 100 * 2 * np.pi / 60.0
stepper = Stepper(topo, state, rest, mat, RFTEnvironment(med),
                  StepperConfig(), omega_T=omega_T)

t0 = time.perf_counter()
nsteps = 200
tot_iters = 0
for _ in range(nsteps):
    stepper.step()
    tot_iters += stepper.newton_iters_last
wall = time.perf_counter() - t0
print(f"{nsteps} steps in {wall:.2f}s -> {1000*wall/nsteps:.2f} ms/step, "
      f"{tot_iters/nsteps:.2f} iters/step")
print("t =", stepper.state.t, "residual", stepper.residual_last)
print("max rigid strain", stepper.max_rigid_strain)

t0 = time.perf_counter()
metrics = run_to_steady(stepper, max_time=60.0)
wall = time.perf_counter() - t0
print(f"run_to_steady wall {wall:.1f}s to t={metrics.elapsed:.1f}s")
rpm = 60 / (2 * np.pi)
print(f"steady={metrics.steady} v={metrics.v*1000:.3f} mm/s "
      f"omega_h={metrics.omega_h*rpm:.2f} rpm omega_t={metrics.omega_t*rpm:.2f} rpm")
print("split:", abs(metrics.omega_h) + abs(metrics.omega_t), "vs", omega_T)
