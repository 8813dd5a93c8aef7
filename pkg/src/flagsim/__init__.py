"""Locomotion models for flagellated robots in granular media.

Two complementary models of the same robot:

* a fully implicit dynamic simulation of the robot as a network of
  discrete elastic rods, with resistive-force-theory drag on the flagella
  and a modified Stokes drag/torque on the head (:mod:`flagsim.sim`);
* a reduced beam-theory model of one flagellum plus head force/torque
  balance, solved in closed form (linear) or as a nonlinear boundary
  value problem (:mod:`flagsim.beam`).

Plus parameter calibration (:mod:`flagsim.calibrate`), design sweeps
(:mod:`flagsim.sweep`), reference designs (:mod:`flagsim.presets`) and a
CLI (``flagsim``).
"""

from .beam import (BeamProblem, BeamSolution, Regime, head_balance,
                   lb_deflection, lb_forces, nlb_solve, normalize_rate,
                   normalize_speed, propulsion_integrals, relaxation_time,
                   solve_tail, split_omega)
from .calibrate import (ExperimentSeries, FitResult, fit_parameters, predict,
                        read_series, synthetic_series, write_series)
from .config import RPM, ConfigError, RunConfig, load_config
from .elastic import (ElasticResult, MaterialParams, axial_stretch,
                      bending_energy, material_curvatures, stretching_energy,
                      total_elastic, twisting_energy)
from .errors import DegenerateGeometryError, SolverError
from .media import (MediumParams, RFTEnvironment, UniformLoadEnvironment,
                    drag_coefficients, external_force_jacobian, head_drag,
                    head_torque, rft_node_force)
from .presets import DESIGN_1, DESIGN_2, DesignPreset, get_design
from .rod import (RobotGeometry, RobotTopology, SimState, UndeformedConfig,
                  build_chain, build_robot, curvature_binormal,
                  parallel_transport, update_frames)
from .sim import (LocomotionMetrics, Stepper, StepperConfig, actuate,
                  flagellar_thrust, lumped_masses, run_to_steady, simulate,
                  step, tip_deflection)
from .sweeps import compare_regimes, read_rows, sweep, write_rows

__version__ = "0.1.0"
