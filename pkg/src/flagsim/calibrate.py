"""Fitting the medium constants (C1, C2, mu) to locomotion measurements.

The measured quantities per motor speed are the translation speed v and
the head rotation rate omega_h.  The fit minimizes the inverse-variance
weighted sum of squared residuals over a series of motor speeds, using a
derivative-free simplex search in log-parameter space (all three
parameters are positive).  The beam model makes each objective
evaluation cheap; the rod-network model can be used for final numbers,
warm-started from a beam fit, at a much higher cost per evaluation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize

from .beam import split_omega
from .config import RPM, RunConfig
from .media import RFTEnvironment
from .sim import Stepper, StepperConfig, run_to_steady


@dataclass
class ExperimentSeries:
    """Measured (or synthesized) locomotion data for one robot."""

    omega_T: np.ndarray            # motor rates (rad/s)
    v: np.ndarray                  # translation speeds (m/s)
    omega_h: np.ndarray            # head rotation rates (rad/s)
    sigma_v: np.ndarray | None = None
    sigma_omega: np.ndarray | None = None
    design: int = 1
    n: int = 2

    def __post_init__(self):
        self.omega_T = np.asarray(self.omega_T, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.omega_h = np.asarray(self.omega_h, dtype=float)
        if not (len(self.omega_T) == len(self.v) == len(self.omega_h)):
            raise ValueError("series columns must have equal length")
        if np.any(self.omega_T <= 0.0):
            raise ValueError("every record needs omega_T > 0")
        for name in ("sigma_v", "sigma_omega"):
            s = getattr(self, name)
            if s is not None:
                s = np.asarray(s, dtype=float)
                if np.any(s < 0.0):
                    raise ValueError("standard deviations must be nonnegative")
                setattr(self, name, s)

    def __len__(self) -> int:
        return len(self.omega_T)


@dataclass
class FitResult:
    C1: float
    C2: float
    mu: float
    objective: float
    iterations: int
    converged: bool


_SERIES_FIELDS = ["design", "n", "omega_T_rpm", "v", "omega_h_rpm",
                  "sigma_v", "sigma_omega_h_rpm"]


def write_series(path: str, series: ExperimentSeries):
    """Persist a series as CSV (rates in rpm, speeds in m/s)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_SERIES_FIELDS)
        writer.writeheader()
        for i in range(len(series)):
            writer.writerow({
                "design": series.design, "n": series.n,
                "omega_T_rpm": series.omega_T[i] / RPM,
                "v": series.v[i],
                "omega_h_rpm": series.omega_h[i] / RPM,
                "sigma_v": "" if series.sigma_v is None else series.sigma_v[i],
                "sigma_omega_h_rpm": "" if series.sigma_omega is None
                else series.sigma_omega[i] / RPM,
            })


def read_series(path: str) -> ExperimentSeries:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"no records in {path!r}")
    sig_v = [r["sigma_v"] for r in rows]
    sig_w = [r["sigma_omega_h_rpm"] for r in rows]
    return ExperimentSeries(
        omega_T=np.array([float(r["omega_T_rpm"]) for r in rows]) * RPM,
        v=np.array([float(r["v"]) for r in rows]),
        omega_h=np.array([float(r["omega_h_rpm"]) for r in rows]) * RPM,
        sigma_v=None if "" in sig_v else np.array([float(s) for s in sig_v]),
        sigma_omega=None if "" in sig_w
        else np.array([float(s) for s in sig_w]) * RPM,
        design=int(rows[0]["design"]), n=int(rows[0]["n"]))


def predict(config: RunConfig, omega_T, model: str = "beam",
            max_time: float | None = None, warm_roots: list | None = None):
    """Model speeds and head rates at the given motor rates.

    ``model`` selects the beam split solver ("beam") or the rod-network
    simulator ("der"; orders of magnitude slower per point).
    ``warm_roots`` is an optional per-point list of flagellar-rate guesses,
    updated in place (a speedup for repeated fits).
    """
    omega_T = np.atleast_1d(np.asarray(omega_T, dtype=float))
    v_out = np.empty_like(omega_T)
    w_out = np.empty_like(omega_T)
    if model == "beam":
        template = config.beam_template()
        medium = config.medium()
        for i, w in enumerate(omega_T):
            x0 = warm_roots[i] if warm_roots else None
            sol = split_omega(w, config.n, template, medium, x0=x0)
            if warm_roots is not None:
                warm_roots[i] = sol.omega_t
            v_out[i] = sol.v_h
            w_out[i] = sol.omega_h
    elif model == "der":
        material = config.material()
        medium = config.medium()
        for i, w in enumerate(omega_T):
            topo, state, rest = config.build()
            stepper = Stepper(topo, state, rest, material,
                              RFTEnvironment(medium),
                              StepperConfig(dt=config.dt, tol=config.tolerance),
                              omega_T=w)
            m = run_to_steady(stepper, max_time=max_time or config.max_time)
            v_out[i] = m.v
            w_out[i] = abs(m.omega_h)
    else:
        raise ValueError(f"unknown model {model!r}")
    return v_out, w_out


DEFAULT_BOUNDS = ((1e-2, 1e3), (1e-4, 1e2), (1e-2, 1e3))   # C1, C2, mu


def fit_parameters(series: ExperimentSeries, config: RunConfig,
                   model: str = "beam", initial=None,
                   bounds=DEFAULT_BOUNDS, max_evals: int = 400,
                   max_time: float | None = None) -> FitResult:
    """Recover (C1, C2, mu) from a measured series.

    Deterministic for fixed inputs (simplex search from a fixed start).
    Residuals are weighted by the series' standard deviations when
    present, else uniformly.
    """
    if len(np.unique(series.omega_T)) < 3:
        raise ValueError("need at least 3 distinct motor rates to fit")
    cfg = replace(config, n=series.n)
    if initial is None:
        initial = (cfg.C1, cfg.C2, cfg.mu)
    initial = np.asarray(initial, dtype=float)
    bounds = np.asarray(bounds, dtype=float)
    if np.any(initial <= 0.0) or np.any(bounds <= 0.0):
        raise ValueError("parameters and bounds must be positive")
    if np.any(initial < bounds[:, 0]) or np.any(initial > bounds[:, 1]):
        raise ValueError("initial guess violates bounds")

    w_v = 1.0 if series.sigma_v is None else 1.0 / series.sigma_v
    w_w = 1.0 if series.sigma_omega is None else 1.0 / series.sigma_omega
    log_lo, log_hi = np.log(bounds[:, 0]), np.log(bounds[:, 1])
    warm_roots = [None] * len(series)

    def objective(z):
        # quadratic penalty keeps the simplex inside the log-box
        over = np.maximum(z - log_hi, 0.0) + np.maximum(log_lo - z, 0.0)
        if np.any(over > 0.0):
            return 1e12 * float(np.sum(over ** 2) + 1.0)
        C1, C2, mu = np.exp(z)
        try:
            v_m, w_m = predict(replace(cfg, C1=C1, C2=C2, mu=mu),
                               series.omega_T, model=model, max_time=max_time,
                               warm_roots=warm_roots)
        except (RuntimeError, ValueError):
            return 1e12
        return float(np.sum((w_v * (v_m - series.v)) ** 2)
                     + np.sum((w_w * (w_m - series.omega_h)) ** 2))

    if model == "der":
        # beam warm start makes the expensive search start near the optimum
        warm = fit_parameters(series, cfg, model="beam", initial=initial,
                              bounds=bounds, max_evals=max_evals)
        initial = np.array([warm.C1, warm.C2, warm.mu])

    result = scipy.optimize.minimize(
        objective, np.log(initial), method="Nelder-Mead",
        options={"maxfev": max_evals, "xatol": 1e-4, "fatol": 1e-14,
                 "adaptive": True})
    C1, C2, mu = np.exp(result.x)
    return FitResult(C1=float(C1), C2=float(C2), mu=float(mu),
                     objective=float(result.fun), iterations=int(result.nfev),
                     converged=bool(result.success))


def synthetic_series(config: RunConfig, omega_T_rpm, noise: float = 0.0,
                     seed: int = 0, model: str = "beam") -> ExperimentSeries:
    """Generate a series from the model itself (for fit validation)."""
    omega_T = np.asarray(omega_T_rpm, dtype=float) * RPM
    v, w = predict(config, omega_T, model=model)
    rng = np.random.default_rng(seed)
    if noise > 0.0:
        v = v * (1.0 + noise * rng.standard_normal(len(v)))
        w = w * (1.0 + noise * rng.standard_normal(len(w)))
    rel = max(noise, 0.01)
    return ExperimentSeries(
        omega_T=omega_T, v=v, omega_h=w,
        sigma_v=rel * np.maximum(np.abs(v), 1e-12),
        sigma_omega=rel * np.maximum(np.abs(w), 1e-9),
        design=config.design or 0, n=config.n)
