"""Peaceman well model: well index, perforation rates, constraints.

Sign convention: perforation rates are positive into the reservoir, so
producers carry negative rates. Each well holds one extra unknown, its
bottom-hole pressure, closed by exactly one constraint equation at a time:

- ``bhp``: residual bhp - target.
- ``rate_gas`` (injectors): residual sum(perforation stream rate) - target
  with the target converted from ft³/hr at standard conditions to lbmol/day
  (379.3 ft³/lbmol). Under RATE_CONDITIONS reservoir the deck value is
  taken as a molar rate in lbmol/day directly.
- ``rate_total`` (producers): residual sum over phases and perforations of
  molar rates minus the target (lbmol/day, negative for production).

A rate-controlled injector switches to the residual bhp - pinjmax whenever
meeting the rate would require bhp above the deck's PINJMAX; the active
constraint is frozen within a Newton iteration and re-evaluated between
iterations.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .deck import Deck, WellSpec
from .errors import NonPhysicalValue
from .grid import Grid
from .units import DARCY_CONST, SCF_PER_LBMOL

INJECTOR, PRODUCER = 0, 1
CTRL_BHP, CTRL_RATE_GAS, CTRL_RATE_TOTAL = 0, 1, 2


@dataclass(frozen=True)
class Perforation:
    cell: int
    wi: float      # ft·md
    z_bh: float    # ft


@dataclass(frozen=True, eq=False)
class Well:
    name: str
    kind: int                       # INJECTOR | PRODUCER
    control: int                    # CTRL_*
    target: float                   # psi (bhp) or lbmol/day (rates)
    perfs: Tuple[Perforation, ...]
    yinj: Optional[np.ndarray]      # (ncg,) injected gas fractions
    tinj: float
    pinjmax: float
    heat_rate: float                # Btu/day
    heat_stop: float                # day


def equivalent_radius(dx: float, dy: float, kx: float, ky: float) -> float:
    """Peaceman anisotropic equivalent well-block radius (ft)."""
    r = ky / kx
    return (0.28 * math.sqrt(math.sqrt(r) * dx * dx + math.sqrt(1.0 / r) * dy * dy)
            / (r ** 0.25 + (1.0 / r) ** 0.25))


def well_index(dx: float, dy: float, h3: float, k11: float, k22: float,
               rw: float, skin: float) -> float:
    """Vertical-well Peaceman index 2π h₃ √(k11 k22)/(ln(re/rw)+s), ft·md."""
    if k11 <= 0.0 or k22 <= 0.0:
        raise NonPhysicalValue("well cell needs positive horizontal permeability")
    if rw <= 0.0:
        raise NonPhysicalValue("well radius must be positive")
    re = equivalent_radius(dx, dy, k11, k22)
    denom = math.log(re / rw) + skin
    if denom <= 0.0:
        raise NonPhysicalValue(
            f"well index denominator ln(re/rw)+skin = {denom} is not positive"
        )
    return 2.0 * math.pi * h3 * math.sqrt(k11 * k22) / denom


def gas_rate_to_molar(rate_ft3_per_hr: float) -> float:
    """Standard-condition gas rate ft³/hr to lbmol/day."""
    return rate_ft3_per_hr * 24.0 / SCF_PER_LBMOL


def perforation_rate(wi: float, mobility_density: float, bhp: float,
                     p_phase: float, gamma: float, z_bh: float,
                     z_cell: float) -> float:
    """Phase molar rate (lbmol/day), positive into the reservoir.

    mobility_density is rho*kr/mu (lbmol/(ft³·cp)); gamma is the phase
    specific weight in psi/ft.
    """
    return (DARCY_CONST * wi * mobility_density
            * (bhp - p_phase - gamma * (z_bh - z_cell)))


def well_equation(well: Well, bhp: float, total_rate: float,
                  capped: bool) -> float:
    """Constraint residual for the well's bhp unknown."""
    if capped:
        return bhp - well.pinjmax
    if well.control == CTRL_BHP:
        return bhp - well.target
    return total_rate - well.target


def build_wells(deck: Deck, grid: Grid) -> Tuple[Well, ...]:
    """Convert deck WELL sections to runtime wells on the grid."""
    wells = []
    for spec in deck.wells:
        cell = grid.cell_index(spec.i - 1, spec.j - 1, spec.k - 1)
        if spec.wi is not None:
            wi = spec.wi
        else:
            i, j, k = spec.i - 1, spec.j - 1, spec.k - 1
            wi = well_index(
                grid.dx[i], grid.dy[j], grid.dz[k],
                grid.kx[cell], grid.ky[cell], spec.radius, spec.skin,
            )
        z_bh = spec.zbh if spec.zbh is not None else float(grid.depth[cell])
        kind = INJECTOR if spec.kind == "injector" else PRODUCER
        if spec.control == "bhp":
            control, target = CTRL_BHP, float(spec.bhp)
        elif spec.control == "rate_gas":
            control = CTRL_RATE_GAS
            if spec.rate_conditions == "standard":
                target = gas_rate_to_molar(spec.rate)
            else:
                target = float(spec.rate)
        else:
            control, target = CTRL_RATE_TOTAL, float(spec.rate)
        yinj = (np.asarray(spec.yinj, dtype=np.float64)
                if spec.yinj else None)
        wells.append(Well(
            name=spec.name, kind=kind, control=control, target=target,
            perfs=(Perforation(cell=cell, wi=wi, z_bh=z_bh),),
            yinj=yinj,
            tinj=spec.tinj if spec.tinj is not None else 0.0,
            pinjmax=spec.pinjmax if spec.pinjmax is not None else math.inf,
            heat_rate=spec.heat_rate, heat_stop=spec.heat_stop,
        ))
    return tuple(wells)
