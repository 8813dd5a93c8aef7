"""Command-line interface.

Subcommands:
    simulate         one rod-network run, trajectory log to CSV
    beam             one beam solve at a fixed motor rate, solution to CSV
    sweep            grid of runs over (n, L, omega_T) to CSV
    fit              recover (C1, C2, mu) from a measured series
    compare-regimes  tip deflection of the three beam regimes

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import calibrate
from . import sweeps as sweep_mod
from .beam import Regime, split_omega
from .config import RPM, ConfigError, RunConfig, load_config
from .errors import SolverError
from .media import RFTEnvironment
from .sim import Stepper, StepperConfig, simulate

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _parse_grid(text: str) -> list[float]:
    """Either comma-separated values or start:stop:count."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("grid must be start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("grid count must be >= 1")
        step = (stop - start) / max(count - 1, 1)
        return [start + i * step for i in range(count)]
    return [float(v) for v in text.split(",") if v]


def _build_config(args) -> RunConfig:
    cfg = RunConfig.from_design(args.design) if args.design else RunConfig()
    if getattr(args, "config", None):
        cfg = load_config(args.config, base=cfg)
    if getattr(args, "n", None) is not None:
        cfg = replace(cfg, n=args.n)
    if getattr(args, "omega_T_rpm", None) is not None:
        cfg = replace(cfg, omega_T=args.omega_T_rpm * RPM)
    if getattr(args, "regime", None) is not None:
        cfg = replace(cfg, regime=Regime.parse(args.regime))
    if getattr(args, "max_time", None) is not None:
        cfg = replace(cfg, max_time=args.max_time)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    topo, state, rest = cfg.build()
    stepper = Stepper(topo, state, rest, cfg.material(),
                      RFTEnvironment(cfg.medium()),
                      StepperConfig(dt=cfg.dt, tol=cfg.tolerance),
                      omega_T=cfg.omega_T)
    records = simulate(stepper, duration=args.duration or cfg.max_time,
                       output_interval=args.output_interval)
    rows = [vars(r) for r in records]
    sweep_mod.write_rows(args.out, rows,
                         ["t", "x", "y", "z", "v", "omega_h", "omega_t",
                          "newton_iters"])
    last = records[-1]
    print(f"simulated {last.t:.2f}s: v={last.v:.4e} m/s "
          f"omega_h={abs(last.omega_h) / RPM:.2f} rpm "
          f"omega_t={abs(last.omega_t) / RPM:.2f} rpm -> {args.out}")
    return EXIT_OK


def cmd_beam(args) -> int:
    cfg = _build_config(args)
    sol = split_omega(cfg.omega_T, cfg.n, cfg.beam_template(), cfg.medium())
    rows = [{"y": y, "w": w, "w_prime": wp}
            for y, w, wp in zip(sol.y, sol.w, sol.w_prime)]
    sweep_mod.write_rows(args.out, rows, ["y", "w", "w_prime"])
    print(f"regime={sol.regime.value} omega_t={sol.omega_t / RPM:.3f} rpm "
          f"omega_h={sol.omega_h / RPM:.3f} rpm v={sol.v_h:.4e} m/s "
          f"F_p={sol.F_p:.4e} N tip={sol.tip_deflection:.4e} m -> {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _build_config(args)
    n_list = [int(v) for v in args.n_list.split(",")]
    grid = _parse_grid(args.omega_T_grid)
    L_list = [float(v) for v in args.L_list.split(",")] if args.L_list else None
    rows = sweep_mod.sweep(cfg, args.model, n_list, grid, L_list=L_list,
                           workers=args.workers)
    sweep_mod.write_rows(args.out, rows, sweep_mod.SWEEP_FIELDS)
    bad = sum(1 for r in rows if r["status"] != "ok")
    print(f"{len(rows)} rows ({bad} failed) -> {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _build_config(args)
    series = calibrate.read_series(args.data)
    result = calibrate.fit_parameters(series, cfg, model=args.model,
                                      max_evals=args.max_evals)
    print(f"C1={result.C1:.4f} C2={result.C2:.5f} mu={result.mu:.4f} "
          f"objective={result.objective:.4e} evals={result.iterations} "
          f"converged={result.converged}")
    if args.out:
        sweep_mod.write_rows(args.out, [vars(result)],
                             ["C1", "C2", "mu", "objective", "iterations",
                              "converged"])
    return EXIT_OK


def cmd_compare_regimes(args) -> int:
    cfg = _build_config(args)
    grid = _parse_grid(args.omega_T_grid)
    rows = sweep_mod.compare_regimes(cfg, grid)
    sweep_mod.write_rows(args.out, rows, sweep_mod.REGIME_FIELDS)
    print(f"{len(rows)} rows -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flagsim",
        description="Flagellated-robot locomotion models (rod network + beam theory)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model_flag=True, out_required=True):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--design", type=int, choices=(1, 2),
                       help="load a reference design preset")
        p.add_argument("--n", type=int, help="flagella count")
        p.add_argument("--omega-T-rpm", dest="omega_T_rpm", type=float,
                       help="motor speed (rpm)")
        p.add_argument("--out", required=out_required, help="output CSV path")
        if model_flag:
            p.add_argument("--model", choices=("der", "beam"), default="beam")

    p = sub.add_parser("simulate", help="one rod-network run")
    common(p, model_flag=False)
    p.add_argument("--duration", type=float, help="simulated seconds")
    p.add_argument("--max-time", dest="max_time", type=float)
    p.add_argument("--output-interval", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("beam", help="one beam solve")
    common(p, model_flag=False)
    p.add_argument("--regime", choices=("lb", "nlb", "nlb_no_head"))
    p.set_defaults(func=cmd_beam)

    p = sub.add_parser("sweep", help="grid of runs")
    common(p)
    p.add_argument("--n-list", default="2,3", help="comma-separated counts")
    p.add_argument("--L-list", default=None, help="comma-separated lengths (m)")
    p.add_argument("--omega-T-grid", required=True,
                   help="rpm values 'a,b,c' or 'start:stop:count'")
    p.add_argument("--max-time", dest="max_time", type=float)
    p.add_argument("--regime", choices=("lb", "nlb", "nlb_no_head"))
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit C1, C2, mu to a measured series")
    common(p, out_required=False)
    p.add_argument("--data", required=True, help="series CSV")
    p.add_argument("--max-evals", type=int, default=400)
    p.add_argument("--max-time", dest="max_time", type=float)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare-regimes", help="beam regimes side by side")
    common(p, model_flag=False)
    p.add_argument("--omega-T-grid", required=True)
    p.set_defaults(func=cmd_compare_regimes)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
