"""Design sweeps, regime comparisons and their CSV serialization.

Each sweep row is an independent model run (parallelizable across
processes); failed points are recorded with an error status so a long
sweep survives individual solver failures.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .beam import (BeamProblem, Regime, normalize_rate, normalize_speed,
                   split_omega)
from .config import RPM, RunConfig
from .errors import SolverError
from .media import RFTEnvironment
from .sim import (Stepper, StepperConfig, flagellar_thrust, run_to_steady,
                  tip_deflection)

SWEEP_FIELDS = [
    "model", "design", "n", "L", "omega_T_rpm",
    "v", "omega_h", "omega_t", "F_p", "tip_deflection",
    "v_bar", "omega_T_bar", "omega_h_bar", "omega_t_bar", "tip_over_L",
    "steady", "status",
]

REGIME_FIELDS = [
    "omega_T_rpm", "omega_T_bar", "regime", "omega_t", "omega_h",
    "tip_deflection", "tip_over_L",
]


def _normalized(row: dict, template: BeamProblem) -> dict:
    row["v_bar"] = normalize_speed(row["v"], template)
    row["omega_T_bar"] = normalize_rate(row["omega_T_rpm"] * RPM, template)
    row["omega_h_bar"] = normalize_rate(row["omega_h"], template)
    row["omega_t_bar"] = normalize_rate(row["omega_t"], template)
    row["tip_over_L"] = row["tip_deflection"] / template.L
    return row


def sweep_point(config: RunConfig, model: str, n: int, L: float,
                omega_T_rpm: float) -> dict:
    """One sweep row; errors are captured in the row's status column."""
    cfg = replace(config, n=n, L=L)
    template = cfg.beam_template()
    row = {"model": model, "design": cfg.design or 0, "n": n, "L": L,
           "omega_T_rpm": omega_T_rpm, "steady": True, "status": "ok"}
    try:
        if model == "beam":
            sol = split_omega(omega_T_rpm * RPM, n, template, cfg.medium())
            row.update(v=sol.v_h, omega_h=sol.omega_h, omega_t=sol.omega_t,
                       F_p=sol.F_p, tip_deflection=sol.tip_deflection)
        elif model == "der":
            topo, state, rest = cfg.build()
            medium = cfg.medium()
            stepper = Stepper(topo, state, rest, cfg.material(),
                              RFTEnvironment(medium),
                              StepperConfig(dt=cfg.dt, tol=cfg.tolerance),
                              omega_T=omega_T_rpm * RPM)
            m = run_to_steady(stepper, max_time=cfg.max_time)
            row.update(v=m.v, omega_h=abs(m.omega_h), omega_t=abs(m.omega_t),
                       F_p=flagellar_thrust(stepper, medium),
                       tip_deflection=tip_deflection(topo, stepper.state),
                       steady=m.steady)
        else:
            raise ValueError(f"unknown model {model!r}")
    except (SolverError, ValueError) as exc:
        row.update(v=math.nan, omega_h=math.nan, omega_t=math.nan,
                   F_p=math.nan, tip_deflection=math.nan, steady=False,
                   status=f"error: {exc}")
        for key in ("v_bar", "omega_T_bar", "omega_h_bar", "omega_t_bar",
                    "tip_over_L"):
            row[key] = math.nan
        return row
    return _normalized(row, template)


def _point_args(args):
    return sweep_point(*args)


def sweep(config: RunConfig, model: str, n_list, omega_T_rpm_grid,
          L_list=None, workers: int = 1) -> list[dict]:
    """Grid of runs over (n, L, omega_T); row order follows the input grids."""
    L_list = [config.L] if L_list is None else list(L_list)
    points = [(config, model, int(n), float(L), float(w))
              for n in n_list for L in L_list for w in omega_T_rpm_grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point_args, points))
    return [sweep_point(*p) for p in points]


def compare_regimes(config: RunConfig, omega_T_rpm_grid,
                    regimes=(Regime.LB, Regime.NLB, Regime.NLB_NO_HEAD)) -> list[dict]:
    """Tip deflection of each beam regime across motor rates."""
    medium = config.medium()
    rows = []
    for w_rpm in omega_T_rpm_grid:
        for regime in regimes:
            template = replace(config.beam_template(), regime=regime)
            sol = split_omega(float(w_rpm) * RPM, config.n, template, medium)
            tip = sol.tip_deflection
            rows.append({
                "omega_T_rpm": float(w_rpm),
                "omega_T_bar": normalize_rate(float(w_rpm) * RPM, template),
                "regime": regime.value,
                "omega_t": sol.omega_t,
                "omega_h": sol.omega_h,
                "tip_deflection": tip,
                "tip_over_L": tip / template.L,
            })
    return rows


def write_rows(path: str, rows: list[dict], fieldnames=None):
    """CSV with a header row; floats serialize with full precision."""
    if not rows:
        raise ValueError("nothing to write")
    fieldnames = fieldnames or list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def read_rows(path: str) -> list[dict]:
    """Inverse of :func:`write_rows`; numeric fields are restored."""
    out = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for key, text in raw.items():
                row[key] = _parse_cell(text)
            out.append(row)
    return out


def _parse_cell(text: str):
    if text is None or text == "":
        return ""
    if text == "True":
        return True
    if text == "False":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text
