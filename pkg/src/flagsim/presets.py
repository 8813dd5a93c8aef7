"""Reference robot designs.

Design 1 is the regime where adding flagella slows the robot down;
design 2 (smaller head, shorter flagella, different medium) reverses
that.  The medium constants C1, C2, mu are the fitted values used for
all predictions.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DesignPreset:
    design: int
    L: float            # flagellum length (m)
    r0: float           # flagellum radius (m)
    E: float            # Young's modulus (Pa)
    nu: float           # Poisson ratio
    density: float      # (kg/m^3)
    R_h: float          # head radius (m)
    L_p: float          # plate diameter (m)
    edge_length: float  # flagellar edge length (m)
    mu: float           # fitted friction constant
    C1: float           # fitted head drag coefficient
    C2: float           # fitted head torque coefficient
    dt: float = 1e-2    # time step (s)


DESIGN_1 = DesignPreset(
    design=1, L=0.111, r0=3.2e-3, E=1.2e6, nu=0.5, density=1000.0,
    R_h=0.02, L_p=0.04, edge_length=4.11e-3,
    mu=6.828, C1=2.420, C2=0.039)

DESIGN_2 = DesignPreset(
    design=2, L=0.089, r0=3.2e-3, E=1.2e6, nu=0.5, density=1000.0,
    R_h=0.015, L_p=0.03, edge_length=4.11e-3,
    mu=2.125, C1=28.750, C2=0.938)


def get_design(design: int) -> DesignPreset:
    try:
        return {1: DESIGN_1, 2: DESIGN_2}[int(design)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown design {design!r}; expected 1 or 2") from None
