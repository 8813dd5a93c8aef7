"""Run configuration: design presets plus INI-style config files.

A config file has sections [robot], [medium], [sim], [beam]; every key
is optional when layered on top of a design preset.  Units are SI except
where the key name says otherwise (rotation rates in rpm are converted
on load, rad/s = rpm * 2 pi / 60).

    [robot]
    n = 2                ; flagella count
    L = 0.111            ; flagellum length (m)
    r0 = 0.0032          ; flagellum radius (m)
    E = 1.2e6            ; Young's modulus (Pa)
    nu = 0.5             ; Poisson ratio
    density = 1000       ; (kg/m^3)
    R_h = 0.02           ; head radius (m)
    L_p = 0.04           ; plate diameter (m)
    edge_length = 0.00411

    [medium]
    mu = 6.828
    C1 = 2.420
    C2 = 0.039

    [sim]
    dt = 0.01            ; (s)
    omega_T_rpm = 100    ; motor speed (rpm)
    max_time = 60        ; simulated-time budget (s)
    tolerance = 1e-8     ; Newton residual tolerance per DOF

    [beam]
    regime = nlb_no_head ; lb | nlb | nlb_no_head
    grid_points = 257
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace

import numpy as np

from .beam import BeamProblem, Regime
from .elastic import MaterialParams
from .media import MediumParams
from .presets import DesignPreset, get_design
from .rod import RobotGeometry, build_robot


RPM = 2.0 * np.pi / 60.0


class ConfigError(ValueError):
    """Bad or missing run configuration."""


@dataclass
class RunConfig:
    """Everything needed to run either model."""

    n: int = 2
    L: float = 0.111
    r0: float = 3.2e-3
    E: float = 1.2e6
    nu: float = 0.5
    density: float = 1000.0
    R_h: float = 0.02
    L_p: float = 0.04
    edge_length: float = 4.11e-3
    mu: float = 6.828
    C1: float = 2.420
    C2: float = 0.039
    dt: float = 1e-2
    omega_T: float = 100.0 * RPM
    max_time: float = 60.0
    tolerance: float = 1e-8
    regime: Regime = Regime.NLB_NO_HEAD
    grid_points: int = 257
    design: int | None = None

    @classmethod
    def from_design(cls, design: int, n: int = 2, **overrides) -> "RunConfig":
        p: DesignPreset = get_design(design)
        cfg = cls(n=n, L=p.L, r0=p.r0, E=p.E, nu=p.nu, density=p.density,
                  R_h=p.R_h, L_p=p.L_p, edge_length=p.edge_length,
                  mu=p.mu, C1=p.C1, C2=p.C2, dt=p.dt, design=p.design)
        return replace(cfg, **overrides)

    def geometry(self) -> RobotGeometry:
        return RobotGeometry(R_h=self.R_h, L_p=self.L_p, n=self.n,
                             L=self.L, edge_len=self.edge_length)

    def material(self) -> MaterialParams:
        return MaterialParams.isotropic_rod(E=self.E, nu=self.nu, r0=self.r0,
                                            density=self.density)

    def medium(self) -> MediumParams:
        return MediumParams.from_friction(mu=self.mu, C1=self.C1, C2=self.C2,
                                          R_h=self.R_h, R_d=0.5 * self.L_p,
                                          L=self.L, r0=self.r0)

    def beam_template(self) -> BeamProblem:
        return BeamProblem.from_robot(L=self.L, EI=self.material().EI,
                                      medium=self.medium(), regime=self.regime,
                                      M=self.grid_points)

    def build(self):
        return build_robot(self.geometry())


_FLOAT_KEYS = {
    ("robot", "L"): "L", ("robot", "r0"): "r0", ("robot", "E"): "E",
    ("robot", "nu"): "nu", ("robot", "density"): "density",
    ("robot", "R_h"): "R_h", ("robot", "L_p"): "L_p",
    ("robot", "edge_length"): "edge_length",
    ("medium", "mu"): "mu", ("medium", "C1"): "C1", ("medium", "C2"): "C2",
    ("sim", "dt"): "dt", ("sim", "max_time"): "max_time",
    ("sim", "tolerance"): "tolerance",
}


def load_config(path: str, base: RunConfig | None = None) -> RunConfig:
    """Parse an INI config file, layering its keys over ``base``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    cfg = base if base is not None else RunConfig()
    known_sections = {"robot", "medium", "sim", "beam"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    try:
        for (section, key), attr in _FLOAT_KEYS.items():
            if parser.has_option(section, key):
                cfg = replace(cfg, **{attr: parser.getfloat(section, key)})
        if parser.has_option("robot", "n"):
            cfg = replace(cfg, n=parser.getint("robot", "n"))
        if parser.has_option("sim", "omega_T_rpm"):
            cfg = replace(cfg, omega_T=parser.getfloat("sim", "omega_T_rpm") * RPM)
        if parser.has_option("beam", "regime"):
            cfg = replace(cfg, regime=Regime.parse(parser.get("beam", "regime")))
        if parser.has_option("beam", "grid_points"):
            cfg = replace(cfg, grid_points=parser.getint("beam", "grid_points"))
    except ValueError as exc:
        raise ConfigError(f"bad value in {path!r}: {exc}") from exc
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.n < 2:
        raise ConfigError("robot needs at least two flagella")
    for name in ("L", "r0", "E", "density", "R_h", "L_p", "edge_length",
                 "mu", "C1", "C2", "dt", "tolerance"):
        if getattr(cfg, name) <= 0.0:
            raise ConfigError(f"{name} must be positive")
    if not 0.0 <= cfg.nu <= 0.5:
        raise ConfigError("nu must lie in [0, 0.5]")
    if cfg.omega_T < 0.0:
        raise ConfigError("omega_T must be nonnegative")
