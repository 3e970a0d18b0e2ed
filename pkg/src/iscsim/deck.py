"""Keyword input decks: grammar, parser, validation, serialization.

Grammar
-------
Decks are UTF-8 text, line oriented. `#` starts a comment running to end of
line; blank lines are ignored. A line holding `*NAME` opens section NAME;
every other line is a row of whitespace-separated tokens whose first token
is the row keyword. Numeric tokens accept scientific notation. Sections may
appear in any order; `*WELL` may repeat (one section per well), all other
sections appear at most once.

Sections and their rows (defaults in brackets; units are field units:
psi, °F, ft, md, lbmol, Btu, cp, day):

*GRID      NX n | NY n | NZ n | DX v.. | DY v.. | DZ v.. | DEPTH_TOP v [0]
           DX/DY/DZ take one value (uniform) or one value per cell along
           the axis.
*ROCK      PERMX v.. | PERMY v.. | PERMZ v.. (one value or ncell values)
           POROSITY v | CPOR v [0] | CTPOR v [0] | CPTPOR v [0]
           POROSITY_MODE linear|nonlinear [linear]
           ROCK_CP cp1 [cp2] [0 0] | THCOND kw ko kg krock kcoke [0...]
           HEATLOSS kob d rho tini  (absent = heat loss off)
*COMPONENTS COMPONENT name water|oil|gas|solid M
           CRITICAL name pcrit tcrit
*KVALUES   KV name kv1 kv2 kv3 kv4 kv5   (absent component: K = 0)
*DENSITY   RHOREF name v | COMPRESS name cp ct1 [ct2] [cpt]
*VISCOSITY LIQUID name avisc bvisc | GAS name avg bvg
*ENTHALPY  CPG name c1 c2 c3 c4 | HVAP name hvr ev | COKE_CP v [0]
*REACTIONS RATE A Ea H  (opens a reaction)
           LAW gas-oil|gas-solid|cracking  (optional; inferred otherwise)
           STOICH name coef  (reactants negative, products positive)
           CCMAX v  (required when any cracking reaction exists)
           TOL v [5e-3]  (stoichiometry mass-balance tolerance)
*RELPERM-SWT SAT s_w krw krow pcow   (one row per node)
*RELPERM-SLT SAT s_g krg krog pcog
*INIT      PRES v | TEMP v | SW v | SO v | SG v | XOIL x.. | YGAS y..
           CC v [0]
*WELL      NAME s | TYPE injector|producer | CELL i j k (1-based)
           RADIUS v | SKIN v [0] | WI v (bypasses the radius formula)
           BHP v | RATE v (gas ft³/hr) | RATE_TOTAL v (lbmol/day)
           RATE_CONDITIONS standard|reservoir [standard]
           TINJ v | YINJ y.. | PINJMAX v [unbounded]
           HEAT_RATE v [0] | HEAT_STOP v [0] | ZBH v [perforation depth]
*SCHEDULE  END t | REPORT t.. | REPORT_INTERVAL dt
           DTINIT v [1e-4] | DTMIN v [1e-6] | DTMAX v [0.25]
*SOLVER    NEWTON_TOL v [1e-2] | NEWTON_MAX n [15]
           LINEAR_TOL v [1e-5] | LINEAR_MAX n [200]
           THREADS n [1] | PRECOND none|bjacobi|ras [ras]
           EPS v [1e-4] | JACOBIAN analytic|numeric [analytic]

Required sections: GRID, ROCK, COMPONENTS, DENSITY, VISCOSITY, ENTHALPY,
RELPERM-SWT, RELPERM-SLT, INIT, SCHEDULE. Component order inside a phase
class follows declaration order; the canonical global ordering is water,
oils, gases, solid.

Parsing validates everything it can see: section completeness, array
lengths against grid dimensions, saturation/fraction sums (1 within
1e-12), component references, reaction mass balance (N·M = 0 within the
deck's tolerance), and table monotonicity. Errors carry the offending
line number where one exists.
"""

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import (
    DeckError,
    DimensionMismatch,
    MissingRequiredSection,
    NonPhysicalValue,
    UnknownKeyword,
)
from .kinetics import RATE_LAWS, Reaction, ReactionModel, validate_reactions
from .pvt import ComponentProps, FluidModel
from .rockfluid import RelPermModel, RockModel, SatTable

SECTIONS = (
    "GRID", "ROCK", "COMPONENTS", "KVALUES", "DENSITY", "VISCOSITY",
    "ENTHALPY", "REACTIONS", "RELPERM-SWT", "RELPERM-SLT", "INIT",
    "WELL", "SCHEDULE", "SOLVER",
)
REQUIRED_SECTIONS = (
    "GRID", "ROCK", "COMPONENTS", "DENSITY", "VISCOSITY", "ENTHALPY",
    "RELPERM-SWT", "RELPERM-SLT", "INIT", "SCHEDULE",
)


# ---------------------------------------------------------------------------
# deck dataclasses (pure-python payloads so equality is structural)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    nz: int
    dx: Tuple[float, ...]
    dy: Tuple[float, ...]
    dz: Tuple[float, ...]
    depth_top: float = 0.0

    @property
    def ncell(self) -> int:
        return self.nx * self.ny * self.nz


@dataclass(frozen=True)
class RockSpec:
    permx: Tuple[float, ...]
    permy: Tuple[float, ...]
    permz: Tuple[float, ...]
    phi_ref: float
    cpor: float = 0.0
    ctpor: float = 0.0
    cptpor: float = 0.0
    porosity_mode: str = "linear"
    cp1: float = 0.0
    cp2: float = 0.0
    kt_w: float = 0.0
    kt_o: float = 0.0
    kt_g: float = 0.0
    kt_rock: float = 0.0
    kt_coke: float = 0.0
    coke_cp: float = 0.0


@dataclass(frozen=True)
class HeatLossSpec:
    k_ob: float
    distance: float
    rho: float
    t_initial: float


@dataclass(frozen=True)
class InitSpec:
    p: float
    t: float
    s_w: float
    s_o: float
    s_g: float
    x: Tuple[float, ...]
    y: Tuple[float, ...]
    c_c: float = 0.0


@dataclass(frozen=True)
class WellSpec:
    name: str
    kind: str                      # injector | producer
    i: int                         # 1-based deck indices
    j: int
    k: int
    control: str                   # bhp | rate_gas | rate_total
    bhp: Optional[float] = None
    rate: Optional[float] = None   # gas ft³/hr (rate_gas) or lbmol/day
    rate_conditions: str = "standard"
    radius: Optional[float] = None
    skin: float = 0.0
    wi: Optional[float] = None
    tinj: Optional[float] = None
    yinj: Tuple[float, ...] = ()
    pinjmax: Optional[float] = None
    heat_rate: float = 0.0
    heat_stop: float = 0.0
    zbh: Optional[float] = None


@dataclass(frozen=True)
class ScheduleSpec:
    t_end: float
    report_times: Tuple[float, ...] = ()
    report_interval: Optional[float] = None
    dt_init: float = 1e-4
    dt_min: float = 1e-6
    dt_max: float = 0.25


@dataclass(frozen=True)
class SolverSpec:
    newton_tol: float = 1e-2
    newton_max: int = 15
    linear_tol: float = 1e-5
    linear_max: int = 200
    threads: int = 1
    precond: str = "ras"
    eps: float = 1e-4
    jacobian: str = "analytic"


@dataclass(frozen=True)
class Deck:
    """Fully validated simulation input."""

    grid: GridSpec
    rock: RockSpec
    fluid: FluidModel
    reactions: Tuple[Reaction, ...]
    c_cmax: Optional[float]
    stoich_tol: float
    swt_rows: Tuple[Tuple[float, float, float, float], ...]
    slt_rows: Tuple[Tuple[float, float, float, float], ...]
    init: InitSpec
    wells: Tuple[WellSpec, ...]
    schedule: ScheduleSpec
    solver: SolverSpec
    heat_loss: Optional[HeatLossSpec] = None

    def rock_model(self) -> RockModel:
        solid = self.fluid.solid
        return RockModel(
            phi_ref=self.rock.phi_ref,
            cpor=self.rock.cpor,
            ctpor=self.rock.ctpor,
            cptpor=self.rock.cptpor,
            porosity_mode=self.rock.porosity_mode,
            cp1=self.rock.cp1,
            cp2=self.rock.cp2,
            coke_cp=self.rock.coke_cp,
            rho_coke=None if solid is None else solid.rho_ref,
            kt_w=self.rock.kt_w,
            kt_o=self.rock.kt_o,
            kt_g=self.rock.kt_g,
            kt_rock=self.rock.kt_rock,
            kt_coke=self.rock.kt_coke,
            p_ref=self.fluid.p_ref,
            t_ref=self.fluid.t_ref,
        )

    def relperm_model(self) -> RelPermModel:
        swt = SatTable(
            kind="swt",
            s=[r[0] for r in self.swt_rows],
            kr=[r[1] for r in self.swt_rows],
            kro=[r[2] for r in self.swt_rows],
            pc=[r[3] for r in self.swt_rows],
        )
        slt = SatTable(
            kind="slt",
            s=[r[0] for r in self.slt_rows],
            kr=[r[1] for r in self.slt_rows],
            kro=[r[2] for r in self.slt_rows],
            pc=[r[3] for r in self.slt_rows],
        )
        return RelPermModel.from_tables(swt, slt)

    def reaction_model(self) -> ReactionModel:
        return ReactionModel.build(self.fluid, self.reactions, self.c_cmax)

    def masses(self) -> Tuple[float, ...]:
        comps = list(self.fluid.gas_capable)
        if self.fluid.solid is not None:
            comps.append(self.fluid.solid)
        return tuple(c.M for c in comps)


# ---------------------------------------------------------------------------
# tokenization
# ---------------------------------------------------------------------------

class _Row:
    __slots__ = ("line", "tokens")

    def __init__(self, line: int, tokens: List[str]):
        self.line = line
        self.tokens = tokens

    @property
    def keyword(self) -> str:
        return self.tokens[0]

    @property
    def args(self) -> List[str]:
        return self.tokens[1:]


def _tokenize(text: str) -> List[_Row]:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        tokens = body.split()
        if tokens:
            rows.append(_Row(lineno, tokens))
    return rows


def _float(tok: str, line: int, what: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise DeckError(f"expected a number for {what}, got {tok!r}", line) from None
    if math.isnan(v) or math.isinf(v):
        raise NonPhysicalValue(f"{what} must be finite, got {tok}", line)
    return v


def _int(tok: str, line: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise DeckError(f"expected an integer for {what}, got {tok!r}", line) from None


def _floats(toks: List[str], line: int, what: str) -> List[float]:
    return [_float(t, line, what) for t in toks]


def _need_args(row: _Row, n: int, usage: str) -> None:
    if len(row.args) != n:
        raise DeckError(
            f"{row.keyword} expects {usage} ({n} values), got {len(row.args)}",
            row.line,
        )


def _need_at_least(row: _Row, n: int, usage: str) -> None:
    if len(row.args) < n:
        raise DeckError(
            f"{row.keyword} expects {usage} (at least {n} values), "
            f"got {len(row.args)}",
            row.line,
        )


def _choice(tok: str, line: int, what: str, allowed: Tuple[str, ...]) -> str:
    if tok not in allowed:
        raise DeckError(
            f"{what} must be one of {', '.join(allowed)}, got {tok!r}", line
        )
    return tok


# ---------------------------------------------------------------------------
# section builders
# ---------------------------------------------------------------------------

def _axis_sizes(values: List[float], n: int, row: _Row, axis: str) -> Tuple[float, ...]:
    if len(values) == 1:
        values = values * n
    if len(values) != n:
        raise DimensionMismatch(
            f"D{axis} expects 1 or {n} values, got {len(values)}", row.line
        )
    for v in values:
        if v <= 0.0:
            raise NonPhysicalValue(f"D{axis} cell sizes must be positive", row.line)
    return tuple(values)


def _build_grid(rows: List[_Row]) -> GridSpec:
    seen: Dict[str, _Row] = {}
    for row in rows:
        if row.keyword not in ("NX", "NY", "NZ", "DX", "DY", "DZ", "DEPTH_TOP"):
            raise UnknownKeyword(f"unknown GRID keyword {row.keyword!r}", row.line)
        if row.keyword in seen:
            raise DeckError(f"duplicate GRID keyword {row.keyword}", row.line)
        seen[row.keyword] = row
    dims = {}
    for key in ("NX", "NY", "NZ"):
        if key not in seen:
            raise MissingRequiredSection(f"GRID is missing {key}")
        row = seen[key]
        _need_args(row, 1, "a cell count")
        n = _int(row.args[0], row.line, key)
        if n < 1:
            raise NonPhysicalValue(f"{key} must be >= 1, got {n}", row.line)
        dims[key] = n
    sizes = {}
    for key, n in (("DX", dims["NX"]), ("DY", dims["NY"]), ("DZ", dims["NZ"])):
        if key not in seen:
            raise MissingRequiredSection(f"GRID is missing {key}")
        row = seen[key]
        _need_at_least(row, 1, "cell sizes")
        sizes[key] = _axis_sizes(
            _floats(row.args, row.line, key), n, row, key[1]
        )
    depth = 0.0
    if "DEPTH_TOP" in seen:
        row = seen["DEPTH_TOP"]
        _need_args(row, 1, "a depth")
        depth = _float(row.args[0], row.line, "DEPTH_TOP")
    return GridSpec(
        nx=dims["NX"], ny=dims["NY"], nz=dims["NZ"],
        dx=sizes["DX"], dy=sizes["DY"], dz=sizes["DZ"], depth_top=depth,
    )


def _cell_array(values: List[float], ncell: int, row: _Row) -> Tuple[float, ...]:
    if len(values) == 1:
        values = values * ncell
    if len(values) != ncell:
        raise DimensionMismatch(
            f"{row.keyword} expects 1 or {ncell} values, got {len(values)}",
            row.line,
        )
    return tuple(values)


def _build_rock(rows: List[_Row], grid: GridSpec):
    ncell = grid.ncell
    perms: Dict[str, Tuple[float, ...]] = {}
    scalars: Dict[str, float] = {}
    mode = "linear"
    rock_cp = (0.0, 0.0)
    thcond = (0.0, 0.0, 0.0, 0.0, 0.0)
    coke_cp = 0.0
    heat_loss = None
    seen = set()
    for row in rows:
        kw = row.keyword
        if kw in seen:
            raise DeckError(f"duplicate ROCK keyword {kw}", row.line)
        seen.add(kw)
        if kw in ("PERMX", "PERMY", "PERMZ"):
            _need_at_least(row, 1, "permeabilities")
            vals = _cell_array(_floats(row.args, row.line, kw), ncell, row)
            for v in vals:
                if v < 0.0:
                    raise NonPhysicalValue(f"{kw} must be >= 0", row.line)
            perms[kw] = vals
        elif kw == "POROSITY":
            _need_args(row, 1, "a porosity")
            v = _float(row.args[0], row.line, kw)
            if not 0.0 < v <= 1.0:
                raise NonPhysicalValue(f"POROSITY must lie in (0, 1], got {v}", row.line)
            scalars["phi"] = v
        elif kw in ("CPOR", "CTPOR", "CPTPOR"):
            _need_args(row, 1, "a compressibility")
            scalars[kw] = _float(row.args[0], row.line, kw)
        elif kw == "POROSITY_MODE":
            _need_args(row, 1, "linear|nonlinear")
            mode = _choice(row.args[0], row.line, kw, ("linear", "nonlinear"))
        elif kw == "ROCK_CP":
            if len(row.args) not in (1, 2):
                raise DeckError("ROCK_CP expects cp1 [cp2]", row.line)
            vals = _floats(row.args, row.line, kw)
            rock_cp = (vals[0], vals[1] if len(vals) == 2 else 0.0)
        elif kw == "THCOND":
            _need_args(row, 5, "kw ko kg krock kcoke")
            vals = _floats(row.args, row.line, kw)
            for v in vals:
                if v < 0.0:
                    raise NonPhysicalValue("THCOND values must be >= 0", row.line)
            thcond = tuple(vals)
        elif kw == "HEATLOSS":
            _need_args(row, 4, "kob d rho tini")
            vals = _floats(row.args, row.line, kw)
            if vals[1] <= 0.0:
                raise NonPhysicalValue("HEATLOSS distance must be positive", row.line)
            heat_loss = HeatLossSpec(vals[0], vals[1], vals[2], vals[3])
        else:
            raise UnknownKeyword(f"unknown ROCK keyword {kw!r}", row.line)
    if "phi" not in scalars:
        raise MissingRequiredSection("ROCK is missing POROSITY")
    for kw in ("PERMX", "PERMY", "PERMZ"):
        if kw not in perms:
            raise MissingRequiredSection(f"ROCK is missing {kw}")
    rock = RockSpec(
        permx=perms["PERMX"], permy=perms["PERMY"], permz=perms["PERMZ"],
        phi_ref=scalars["phi"],
        cpor=scalars.get("CPOR", 0.0),
        ctpor=scalars.get("CTPOR", 0.0),
        cptpor=scalars.get("CPTPOR", 0.0),
        porosity_mode=mode,
        cp1=rock_cp[0], cp2=rock_cp[1],
        kt_w=thcond[0], kt_o=thcond[1], kt_g=thcond[2],
        kt_rock=thcond[3], kt_coke=thcond[4],
        coke_cp=coke_cp,
    )
    return rock, heat_loss


class _ComponentDraft:
    """Mutable accumulator for one component's deck rows."""

    def __init__(self, name: str, phase_class: str, m: float, line: int):
        self.values: Dict[str, object] = {
            "name": name, "phase_class": phase_class, "M": m,
        }
        self.line = line

    def set(self, line: int, **kv) -> None:
        for key, val in kv.items():
            if key in self.values:
                raise DeckError(
                    f"component {self.values['name']}: {key} given twice", line
                )
            self.values[key] = val


def _build_components(
    comp_rows: List[_Row],
    kv_rows: List[_Row],
    dens_rows: List[_Row],
    visc_rows: List[_Row],
    enth_rows: List[_Row],
    eps: float,
) -> Tuple[FluidModel, float]:
    drafts: Dict[str, _ComponentDraft] = {}
    order: List[str] = []
    for row in comp_rows:
        if row.keyword == "COMPONENT":
            _need_args(row, 3, "name class M")
            name, cls, mtok = row.args
            _choice(cls, row.line, "component class", ("water", "oil", "gas", "solid"))
            if name in drafts:
                raise DeckError(f"component {name} declared twice", row.line)
            m = _float(mtok, row.line, "molar mass")
            if m <= 0.0:
                raise NonPhysicalValue("molar mass must be positive", row.line)
            drafts[name] = _ComponentDraft(name, cls, m, row.line)
            order.append(name)
        elif row.keyword == "CRITICAL":
            _need_args(row, 3, "name pcrit tcrit")
            d = _lookup(drafts, row.args[0], row.line)
            pc = _float(row.args[1], row.line, "pcrit")
            tc = _float(row.args[2], row.line, "tcrit")
            if pc <= 0.0:
                raise NonPhysicalValue("pcrit must be positive", row.line)
            d.set(row.line, p_crit=pc, T_crit=tc)
        else:
            raise UnknownKeyword(f"unknown COMPONENTS keyword {row.keyword!r}", row.line)
    if not drafts:
        raise MissingRequiredSection("COMPONENTS declares no components")

    for row in kv_rows:
        if row.keyword != "KV":
            raise UnknownKeyword(f"unknown KVALUES keyword {row.keyword!r}", row.line)
        _need_args(row, 6, "name kv1 kv2 kv3 kv4 kv5")
        d = _lookup(drafts, row.args[0], row.line)
        vals = _floats(row.args[1:], row.line, "KV")
        d.set(row.line, kv1=vals[0], kv2=vals[1], kv3=vals[2],
              kv4=vals[3], kv5=vals[4])

    for row in dens_rows:
        if row.keyword == "RHOREF":
            _need_args(row, 2, "name density")
            d = _lookup(drafts, row.args[0], row.line)
            v = _float(row.args[1], row.line, "RHOREF")
            if v <= 0.0:
                raise NonPhysicalValue("RHOREF must be positive", row.line)
            d.set(row.line, rho_ref=v)
        elif row.keyword == "COMPRESS":
            if len(row.args) not in (3, 4, 5):
                raise DeckError("COMPRESS expects name cp ct1 [ct2] [cpt]", row.line)
            d = _lookup(drafts, row.args[0], row.line)
            vals = _floats(row.args[1:], row.line, "COMPRESS")
            kv = {"cp": vals[0], "ct1": vals[1]}
            if len(vals) >= 3:
                kv["ct2"] = vals[2]
            if len(vals) == 4:
                kv["cpt"] = vals[3]
            d.set(row.line, **kv)
        else:
            raise UnknownKeyword(f"unknown DENSITY keyword {row.keyword!r}", row.line)

    for row in visc_rows:
        if row.keyword == "LIQUID":
            _need_args(row, 3, "name avisc bvisc")
            d = _lookup(drafts, row.args[0], row.line)
            vals = _floats(row.args[1:], row.line, "LIQUID")
            if vals[0] <= 0.0:
                raise NonPhysicalValue("avisc must be positive", row.line)
            d.set(row.line, avisc=vals[0], bvisc=vals[1])
        elif row.keyword == "GAS":
            _need_args(row, 3, "name avg bvg")
            d = _lookup(drafts, row.args[0], row.line)
            vals = _floats(row.args[1:], row.line, "GAS")
            if vals[0] <= 0.0:
                raise NonPhysicalValue("avg must be positive", row.line)
            d.set(row.line, avg=vals[0], bvg=vals[1])
        else:
            raise UnknownKeyword(f"unknown VISCOSITY keyword {row.keyword!r}", row.line)

    coke_cp = 0.0
    for row in enth_rows:
        if row.keyword == "CPG":
            _need_args(row, 5, "name c1 c2 c3 c4")
            d = _lookup(drafts, row.args[0], row.line)
            vals = _floats(row.args[1:], row.line, "CPG")
            d.set(row.line, cpg1=vals[0], cpg2=vals[1], cpg3=vals[2], cpg4=vals[3])
        elif row.keyword == "HVAP":
            _need_args(row, 3, "name hvr ev")
            d = _lookup(drafts, row.args[0], row.line)
            vals = _floats(row.args[1:], row.line, "HVAP")
            if vals[0] < 0.0:
                raise NonPhysicalValue("hvr must be >= 0", row.line)
            d.set(row.line, hvr=vals[0], ev=vals[1])
        elif row.keyword == "COKE_CP":
            _need_args(row, 1, "a heat capacity")
            coke_cp = _float(row.args[0], row.line, "COKE_CP")
        else:
            raise UnknownKeyword(f"unknown ENTHALPY keyword {row.keyword!r}", row.line)

    water = None
    oils: List[ComponentProps] = []
    gases: List[ComponentProps] = []
    solid = None
    for name in order:
        d = drafts[name]
        try:
            comp = ComponentProps(**d.values)  # type: ignore[arg-type]
            comp.validate()
        except NonPhysicalValue as exc:
            raise NonPhysicalValue(str(exc), d.line) from None
        cls = comp.phase_class
        if cls == "water":
            if water is not None:
                raise NonPhysicalValue("exactly one water component allowed", d.line)
            water = comp
        elif cls == "oil":
            oils.append(comp)
        elif cls == "gas":
            gases.append(comp)
        else:
            if solid is not None:
                raise NonPhysicalValue("at most one solid component allowed", d.line)
            solid = comp
    if water is None:
        raise MissingRequiredSection("COMPONENTS declares no water component")
    if not oils:
        raise MissingRequiredSection("COMPONENTS declares no oil component")
    fluid = FluidModel(
        water=water, oils=tuple(oils), gases=tuple(gases), solid=solid, eps=eps
    )
    return fluid, coke_cp


def _lookup(drafts: Dict[str, _ComponentDraft], name: str, line: int) -> _ComponentDraft:
    try:
        return drafts[name]
    except KeyError:
        raise DeckError(f"unknown component {name!r}", line) from None


def _infer_law(stoich: List[Tuple[str, float]], fluid: FluidModel, line: int) -> str:
    oil_names = {c.name for c in fluid.oils}
    gas_names = {c.name for c in fluid.gases}
    solid_name = fluid.solid.name if fluid.solid is not None else None
    has_oil_reactant = any(n in oil_names and c < 0 for n, c in stoich)
    has_gas_reactant = any(n in gas_names and c < 0 for n, c in stoich)
    has_solid_reactant = any(n == solid_name and c < 0 for n, c in stoich)
    if has_solid_reactant and has_gas_reactant:
        return "gas-solid"
    if has_oil_reactant and has_gas_reactant:
        return "gas-oil"
    if has_oil_reactant:
        return "cracking"
    raise NonPhysicalValue(
        "cannot infer a rate law: reaction has no oil or solid reactant", line
    )


def _build_reactions(rows: List[_Row], fluid: FluidModel):
    reactions: List[Reaction] = []
    c_cmax = None
    tol = 5e-3
    current: Optional[dict] = None

    def finish() -> None:
        if current is None:
            return
        stoich = current["stoich"]
        if not stoich:
            raise NonPhysicalValue(
                "reaction has no STOICH rows", current["line"]
            )
        law = current["law"] or _infer_law(stoich, fluid, current["line"])
        reactions.append(
            Reaction(
                law=law, a=current["a"], ea=current["ea"], h=current["h"],
                stoich=tuple(stoich),
            )
        )

    known_names = set(fluid.names)
    for row in rows:
        kw = row.keyword
        if kw == "RATE":
            finish()
            _need_args(row, 3, "A Ea H")
            vals = _floats(row.args, row.line, "RATE")
            if vals[0] < 0.0:
                raise NonPhysicalValue("frequency factor must be >= 0", row.line)
            current = {
                "a": vals[0], "ea": vals[1], "h": vals[2],
                "law": None, "stoich": [], "line": row.line,
            }
        elif kw == "LAW":
            if current is None:
                raise DeckError("LAW before any RATE row", row.line)
            _need_args(row, 1, "a rate law")
            current["law"] = _choice(row.args[0], row.line, "LAW", RATE_LAWS)
        elif kw == "STOICH":
            if current is None:
                raise DeckError("STOICH before any RATE row", row.line)
            _need_args(row, 2, "component coefficient")
            name = row.args[0]
            if name not in known_names:
                raise DeckError(f"unknown component {name!r}", row.line)
            coef = _float(row.args[1], row.line, "stoichiometric coefficient")
            if coef == 0.0:
                raise NonPhysicalValue("stoichiometric coefficient must be nonzero",
                                       row.line)
            if any(n == name for n, _ in current["stoich"]):
                raise DeckError(f"component {name} listed twice in STOICH", row.line)
            current["stoich"].append((name, coef))
        elif kw == "CCMAX":
            _need_args(row, 1, "a coke limit")
            v = _float(row.args[0], row.line, "CCMAX")
            if v <= 0.0:
                raise NonPhysicalValue("CCMAX must be positive", row.line)
            c_cmax = v
        elif kw == "TOL":
            _need_args(row, 1, "a tolerance")
            v = _float(row.args[0], row.line, "TOL")
            if v <= 0.0:
                raise NonPhysicalValue("TOL must be positive", row.line)
            tol = v
        else:
            raise UnknownKeyword(f"unknown REACTIONS keyword {kw!r}", row.line)
    finish()
    return tuple(reactions), c_cmax, tol


def _build_table(rows: List[_Row], kind: str):
    out = []
    for row in rows:
        if row.keyword != "SAT":
            raise UnknownKeyword(
                f"unknown RELPERM-{kind.upper()} keyword {row.keyword!r}", row.line
            )
        _need_args(row, 4, "s kr kro pc")
        out.append(tuple(_floats(row.args, row.line, "SAT")))
    if len(out) < 2:
        raise NonPhysicalValue(
            f"RELPERM-{kind.upper()} needs at least two SAT rows"
        )
    return tuple(out)


def _build_init(rows: List[_Row], fluid: FluidModel) -> InitSpec:
    vals: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for row in rows:
        kw = row.keyword
        if kw in vals:
            raise DeckError(f"duplicate INIT keyword {kw}", row.line)
        lines[kw] = row.line
        if kw in ("PRES", "TEMP", "SW", "SO", "SG", "CC"):
            _need_args(row, 1, "a value")
            vals[kw] = _float(row.args[0], row.line, kw)
        elif kw == "XOIL":
            _need_at_least(row, 1, "oil molar fractions")
            vals[kw] = tuple(_floats(row.args, row.line, "XOIL"))
        elif kw == "YGAS":
            _need_at_least(row, 1, "gas molar fractions")
            vals[kw] = tuple(_floats(row.args, row.line, "YGAS"))
        else:
            raise UnknownKeyword(f"unknown INIT keyword {kw!r}", row.line)
    for key in ("PRES", "TEMP", "SW", "SO", "SG", "XOIL", "YGAS"):
        if key not in vals:
            raise MissingRequiredSection(f"INIT is missing {key}")
    p = float(vals["PRES"])
    t = float(vals["TEMP"])
    if p <= 0.0:
        raise NonPhysicalValue("initial pressure must be positive", lines["PRES"])
    if t <= -459.67:
        raise NonPhysicalValue("initial temperature below absolute zero",
                               lines["TEMP"])
    s_w, s_o, s_g = (float(vals["SW"]), float(vals["SO"]), float(vals["SG"]))
    for key, s in (("SW", s_w), ("SO", s_o), ("SG", s_g)):
        if s < 0.0 or s > 1.0:
            raise NonPhysicalValue(f"{key} must lie in [0, 1], got {s}", lines[key])
    if abs(s_w + s_o + s_g - 1.0) > 1e-12:
        raise NonPhysicalValue(
            f"saturations must sum to 1 within 1e-12, got {s_w + s_o + s_g!r}",
            lines["SG"],
        )
    x = vals["XOIL"]
    if len(x) != fluid.nco:
        raise DimensionMismatch(
            f"XOIL expects {fluid.nco} values, got {len(x)}", lines["XOIL"]
        )
    y = vals["YGAS"]
    if len(y) != fluid.ncg:
        raise DimensionMismatch(
            f"YGAS expects {fluid.ncg} values, got {len(y)}", lines["YGAS"]
        )
    for name, vec, line in (("XOIL", x, lines["XOIL"]), ("YGAS", y, lines["YGAS"])):
        if any(v < 0.0 or v > 1.0 for v in vec):
            raise NonPhysicalValue(f"{name} fractions must lie in [0, 1]", line)
        if abs(sum(vec) - 1.0) > 1e-12:
            raise NonPhysicalValue(
                f"{name} must sum to 1 within 1e-12, got {sum(vec)!r}", line
            )
    c_c = float(vals.get("CC", 0.0))
    if c_c < 0.0:
        raise NonPhysicalValue("initial coke concentration must be >= 0",
                               lines.get("CC", 0))
    return InitSpec(p=p, t=t, s_w=s_w, s_o=s_o, s_g=s_g, x=x, y=y, c_c=c_c)


def _build_well(rows: List[_Row], grid: GridSpec, fluid: FluidModel,
                section_line: int) -> WellSpec:
    vals: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for row in rows:
        kw = row.keyword
        if kw in vals:
            raise DeckError(f"duplicate WELL keyword {kw}", row.line)
        lines[kw] = row.line
        if kw == "NAME":
            _need_args(row, 1, "a well name")
            vals[kw] = row.args[0]
        elif kw == "TYPE":
            _need_args(row, 1, "injector|producer")
            vals[kw] = _choice(row.args[0], row.line, "TYPE",
                               ("injector", "producer"))
        elif kw == "CELL":
            _need_args(row, 3, "i j k")
            vals[kw] = tuple(_int(a, row.line, "CELL") for a in row.args)
        elif kw in ("RADIUS", "SKIN", "WI", "BHP", "RATE", "RATE_TOTAL",
                    "TINJ", "PINJMAX", "HEAT_RATE", "HEAT_STOP", "ZBH"):
            _need_args(row, 1, "a value")
            vals[kw] = _float(row.args[0], row.line, kw)
        elif kw == "RATE_CONDITIONS":
            _need_args(row, 1, "standard|reservoir")
            vals[kw] = _choice(row.args[0], row.line, kw,
                               ("standard", "reservoir"))
        elif kw == "YINJ":
            _need_at_least(row, 1, "injected gas fractions")
            vals[kw] = tuple(_floats(row.args, row.line, "YINJ"))
        else:
            raise UnknownKeyword(f"unknown WELL keyword {kw!r}", row.line)
    for key in ("NAME", "TYPE", "CELL"):
        if key not in vals:
            raise MissingRequiredSection(
                f"WELL section at line {section_line} is missing {key}"
            )
    i, j, k = vals["CELL"]
    if not (1 <= i <= grid.nx and 1 <= j <= grid.ny and 1 <= k <= grid.nz):
        raise DimensionMismatch(
            f"CELL ({i},{j},{k}) outside grid {grid.nx}x{grid.ny}x{grid.nz}",
            lines["CELL"],
        )
    kind = str(vals["TYPE"])
    has_bhp = "BHP" in vals
    has_rate = "RATE" in vals
    has_rate_total = "RATE_TOTAL" in vals
    if has_rate and has_rate_total:
        raise DeckError("give RATE or RATE_TOTAL, not both", lines["RATE_TOTAL"])
    if has_rate or has_rate_total:
        control = "rate_gas" if has_rate else "rate_total"
    elif has_bhp:
        control = "bhp"
    else:
        raise MissingRequiredSection(
            f"WELL {vals['NAME']} needs BHP, RATE, or RATE_TOTAL"
        )
    if control == "bhp" and float(vals["BHP"]) <= 0.0:
        raise NonPhysicalValue("BHP must be positive", lines["BHP"])
    radius = vals.get("RADIUS")
    wi = vals.get("WI")
    if radius is None and wi is None:
        raise MissingRequiredSection(
            f"WELL {vals['NAME']} needs RADIUS or WI"
        )
    if radius is not None and float(radius) <= 0.0:
        raise NonPhysicalValue("RADIUS must be positive", lines["RADIUS"])
    if wi is not None and float(wi) <= 0.0:
        raise NonPhysicalValue("WI must be positive", lines["WI"])
    yinj = tuple(vals.get("YINJ", ()))
    if kind == "injector":
        if control == "rate_gas" and float(vals["RATE"]) < 0.0:
            raise NonPhysicalValue("injector RATE must be >= 0", lines["RATE"])
        if "TINJ" not in vals:
            raise MissingRequiredSection(f"injector {vals['NAME']} needs TINJ")
        if not yinj:
            raise MissingRequiredSection(f"injector {vals['NAME']} needs YINJ")
        if len(yinj) != fluid.ncg:
            raise DimensionMismatch(
                f"YINJ expects {fluid.ncg} values, got {len(yinj)}", lines["YINJ"]
            )
        if any(v < 0.0 for v in yinj) or abs(sum(yinj) - 1.0) > 1e-12:
            raise NonPhysicalValue(
                "YINJ fractions must be >= 0 and sum to 1 within 1e-12",
                lines["YINJ"],
            )
    heat_rate = float(vals.get("HEAT_RATE", 0.0))
    heat_stop = float(vals.get("HEAT_STOP", 0.0))
    if heat_rate < 0.0:
        raise NonPhysicalValue("HEAT_RATE must be >= 0", lines["HEAT_RATE"])
    if heat_rate > 0.0 and heat_stop <= 0.0:
        raise NonPhysicalValue(
            "HEAT_RATE needs a positive HEAT_STOP time", lines["HEAT_RATE"]
        )
    return WellSpec(
        name=str(vals["NAME"]), kind=kind, i=i, j=j, k=k, control=control,
        bhp=float(vals["BHP"]) if has_bhp else None,
        rate=float(vals["RATE"]) if has_rate
        else float(vals["RATE_TOTAL"]) if has_rate_total else None,
        rate_conditions=str(vals.get("RATE_CONDITIONS", "standard")),
        radius=float(radius) if radius is not None else None,
        skin=float(vals.get("SKIN", 0.0)),
        wi=float(wi) if wi is not None else None,
        tinj=float(vals["TINJ"]) if "TINJ" in vals else None,
        yinj=yinj,
        pinjmax=float(vals["PINJMAX"]) if "PINJMAX" in vals else None,
        heat_rate=heat_rate, heat_stop=heat_stop,
        zbh=float(vals["ZBH"]) if "ZBH" in vals else None,
    )


def _build_schedule(rows: List[_Row]) -> ScheduleSpec:
    vals: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for row in rows:
        kw = row.keyword
        if kw in vals:
            raise DeckError(f"duplicate SCHEDULE keyword {kw}", row.line)
        lines[kw] = row.line
        if kw in ("END", "REPORT_INTERVAL", "DTINIT", "DTMIN", "DTMAX"):
            _need_args(row, 1, "a time")
            vals[kw] = _float(row.args[0], row.line, kw)
        elif kw == "REPORT":
            _need_at_least(row, 1, "report times")
            vals[kw] = tuple(_floats(row.args, row.line, "REPORT"))
        else:
            raise UnknownKeyword(f"unknown SCHEDULE keyword {kw!r}", row.line)
    if "END" not in vals:
        raise MissingRequiredSection("SCHEDULE is missing END")
    t_end = float(vals["END"])
    if t_end <= 0.0:
        raise NonPhysicalValue("END must be positive", lines["END"])
    report = tuple(sorted(set(vals.get("REPORT", ()))))
    for t in report:
        if t <= 0.0 or t > t_end:
            raise NonPhysicalValue(
                f"report time {t} outside (0, END]", lines["REPORT"]
            )
    interval = vals.get("REPORT_INTERVAL")
    if interval is not None and float(interval) <= 0.0:
        raise NonPhysicalValue("REPORT_INTERVAL must be positive",
                               lines["REPORT_INTERVAL"])
    sched = ScheduleSpec(
        t_end=t_end,
        report_times=report,
        report_interval=float(interval) if interval is not None else None,
        dt_init=float(vals.get("DTINIT", 1e-4)),
        dt_min=float(vals.get("DTMIN", 1e-6)),
        dt_max=float(vals.get("DTMAX", 0.25)),
    )
    if not 0.0 < sched.dt_min <= sched.dt_init <= sched.dt_max:
        raise NonPhysicalValue(
            f"need 0 < DTMIN <= DTINIT <= DTMAX, got "
            f"{sched.dt_min}, {sched.dt_init}, {sched.dt_max}",
            lines.get("DTINIT", lines["END"]),
        )
    return sched


def _build_solver(rows: List[_Row]) -> SolverSpec:
    vals: Dict[str, object] = {}
    for row in rows:
        kw = row.keyword
        if kw in vals:
            raise DeckError(f"duplicate SOLVER keyword {kw}", row.line)
        if kw in ("NEWTON_TOL", "LINEAR_TOL", "EPS"):
            _need_args(row, 1, "a tolerance")
            v = _float(row.args[0], row.line, kw)
            if v <= 0.0:
                raise NonPhysicalValue(f"{kw} must be positive", row.line)
            vals[kw] = v
        elif kw in ("NEWTON_MAX", "LINEAR_MAX", "THREADS"):
            _need_args(row, 1, "a count")
            v = _int(row.args[0], row.line, kw)
            if v < 1:
                raise NonPhysicalValue(f"{kw} must be >= 1", row.line)
            vals[kw] = v
        elif kw == "PRECOND":
            _need_args(row, 1, "none|bjacobi|ras")
            vals[kw] = _choice(row.args[0], row.line, kw,
                               ("none", "bjacobi", "ras"))
        elif kw == "JACOBIAN":
            _need_args(row, 1, "analytic|numeric")
            vals[kw] = _choice(row.args[0], row.line, kw,
                               ("analytic", "numeric"))
        else:
            raise UnknownKeyword(f"unknown SOLVER keyword {kw!r}", row.line)
    return SolverSpec(
        newton_tol=float(vals.get("NEWTON_TOL", 1e-2)),
        newton_max=int(vals.get("NEWTON_MAX", 15)),
        linear_tol=float(vals.get("LINEAR_TOL", 1e-5)),
        linear_max=int(vals.get("LINEAR_MAX", 200)),
        threads=int(vals.get("THREADS", 1)),
        precond=str(vals.get("PRECOND", "ras")),
        eps=float(vals.get("EPS", 1e-4)),
        jacobian=str(vals.get("JACOBIAN", "analytic")),
    )


# ---------------------------------------------------------------------------
# top-level parse / serialize
# ---------------------------------------------------------------------------

def parse_deck(text: str) -> Deck:
    """Parse and fully validate deck text. Raises DeckError subclasses."""
    rows = _tokenize(text)
    sections: Dict[str, List[_Row]] = {}
    well_sections: List[Tuple[int, List[_Row]]] = []
    current: Optional[List[_Row]] = None
    for row in rows:
        first = row.tokens[0]
        if first.startswith("*"):
            name = first[1:]
            if name not in SECTIONS:
                raise UnknownKeyword(f"unknown section {first!r}", row.line)
            if len(row.tokens) != 1:
                raise DeckError(f"section header {first} takes no values", row.line)
            if name == "WELL":
                well_sections.append((row.line, []))
                current = well_sections[-1][1]
            else:
                if name in sections:
                    raise DeckError(f"duplicate section {first}", row.line)
                sections[name] = []
                current = sections[name]
        else:
            if current is None:
                raise DeckError(
                    f"row {first!r} appears before any section header", row.line
                )
            current.append(row)
    for name in REQUIRED_SECTIONS:
        if name not in sections:
            raise MissingRequiredSection(f"required section *{name} is missing")

    grid = _build_grid(sections["GRID"])
    rock, heat_loss = _build_rock(sections["ROCK"], grid)
    solver = _build_solver(sections.get("SOLVER", []))
    fluid, coke_cp = _build_components(
        sections["COMPONENTS"], sections.get("KVALUES", []),
        sections["DENSITY"], sections["VISCOSITY"], sections["ENTHALPY"],
        solver.eps,
    )
    rock = replace(rock, coke_cp=coke_cp)
    reactions, c_cmax, stoich_tol = _build_reactions(
        sections.get("REACTIONS", []), fluid
    )
    swt_rows = _build_table(sections["RELPERM-SWT"], "swt")
    slt_rows = _build_table(sections["RELPERM-SLT"], "slt")
    init = _build_init(sections["INIT"], fluid)
    wells = tuple(
        _build_well(wrows, grid, fluid, line) for line, wrows in well_sections
    )
    names = [w.name for w in wells]
    if len(set(names)) != len(names):
        raise DeckError("well names must be unique")
    schedule = _build_schedule(sections["SCHEDULE"])

    deck = Deck(
        grid=grid, rock=rock, fluid=fluid,
        reactions=reactions, c_cmax=c_cmax, stoich_tol=stoich_tol,
        swt_rows=swt_rows, slt_rows=slt_rows,
        init=init, wells=wells, schedule=schedule, solver=solver,
        heat_loss=heat_loss,
    )
    _validate_deck(deck)
    return deck


def _validate_deck(deck: Deck) -> None:
    deck.relperm_model()
    if deck.reactions:
        model = deck.reaction_model()
        validate_reactions(model, np.array(deck.masses()), deck.stoich_tol)
    for well in deck.wells:
        if well.kind == "injector" and well.control == "rate_gas":
            if well.pinjmax is not None and well.pinjmax <= 0.0:
                raise NonPhysicalValue(
                    f"well {well.name}: PINJMAX must be positive"
                )


def load_deck(path) -> Deck:
    """Read a deck file and parse it."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_deck(fh.read())


def _fmt(v: float) -> str:
    return repr(float(v))


def _fmt_seq(vals) -> str:
    return " ".join(_fmt(v) for v in vals)


def serialize_deck(deck: Deck) -> str:
    """Emit canonical deck text; parse_deck(serialize_deck(d)) == d."""
    out: List[str] = []
    g = deck.grid
    out += ["*GRID",
            f"NX {g.nx}", f"NY {g.ny}", f"NZ {g.nz}",
            f"DX {_fmt_seq(g.dx)}", f"DY {_fmt_seq(g.dy)}",
            f"DZ {_fmt_seq(g.dz)}", f"DEPTH_TOP {_fmt(g.depth_top)}"]
    r = deck.rock
    out += ["*ROCK",
            f"PERMX {_fmt_seq(r.permx)}", f"PERMY {_fmt_seq(r.permy)}",
            f"PERMZ {_fmt_seq(r.permz)}", f"POROSITY {_fmt(r.phi_ref)}",
            f"CPOR {_fmt(r.cpor)}", f"CTPOR {_fmt(r.ctpor)}",
            f"CPTPOR {_fmt(r.cptpor)}", f"POROSITY_MODE {r.porosity_mode}",
            f"ROCK_CP {_fmt(r.cp1)} {_fmt(r.cp2)}",
            f"THCOND {_fmt(r.kt_w)} {_fmt(r.kt_o)} {_fmt(r.kt_g)} "
            f"{_fmt(r.kt_rock)} {_fmt(r.kt_coke)}"]
    if deck.heat_loss is not None:
        h = deck.heat_loss
        out.append(
            f"HEATLOSS {_fmt(h.k_ob)} {_fmt(h.distance)} {_fmt(h.rho)} "
            f"{_fmt(h.t_initial)}"
        )
    comps = list(deck.fluid.gas_capable)
    if deck.fluid.solid is not None:
        comps.append(deck.fluid.solid)
    out.append("*COMPONENTS")
    for c in comps:
        out.append(f"COMPONENT {c.name} {c.phase_class} {_fmt(c.M)}")
    for c in comps:
        if c.p_crit is not None:
            out.append(f"CRITICAL {c.name} {_fmt(c.p_crit)} {_fmt(c.T_crit)}")
    kv_lines = [
        f"KV {c.name} {_fmt(c.kv1)} {_fmt(c.kv2)} {_fmt(c.kv3)} "
        f"{_fmt(c.kv4)} {_fmt(c.kv5)}"
        for c in comps
        if (c.kv1, c.kv2, c.kv3, c.kv4, c.kv5) != (0.0, 0.0, 0.0, 0.0, 0.0)
    ]
    if kv_lines:
        out.append("*KVALUES")
        out += kv_lines
    out.append("*DENSITY")
    for c in comps:
        if c.rho_ref is not None:
            out.append(f"RHOREF {c.name} {_fmt(c.rho_ref)}")
    for c in comps:
        if (c.cp, c.ct1, c.ct2, c.cpt) != (0.0, 0.0, 0.0, 0.0):
            out.append(
                f"COMPRESS {c.name} {_fmt(c.cp)} {_fmt(c.ct1)} "
                f"{_fmt(c.ct2)} {_fmt(c.cpt)}"
            )
    out.append("*VISCOSITY")
    for c in comps:
        if c.avisc is not None:
            out.append(f"LIQUID {c.name} {_fmt(c.avisc)} {_fmt(c.bvisc)}")
    for c in comps:
        if c.avg is not None:
            out.append(f"GAS {c.name} {_fmt(c.avg)} {_fmt(c.bvg)}")
    out.append("*ENTHALPY")
    for c in comps:
        if (c.cpg1, c.cpg2, c.cpg3, c.cpg4) != (0.0, 0.0, 0.0, 0.0):
            out.append(
                f"CPG {c.name} {_fmt(c.cpg1)} {_fmt(c.cpg2)} "
                f"{_fmt(c.cpg3)} {_fmt(c.cpg4)}"
            )
    for c in comps:
        if c.hvr != 0.0:
            out.append(f"HVAP {c.name} {_fmt(c.hvr)} {_fmt(c.ev)}")
    if deck.rock.coke_cp != 0.0:
        out.append(f"COKE_CP {_fmt(deck.rock.coke_cp)}")
    if deck.reactions:
        out.append("*REACTIONS")
        out.append(f"TOL {_fmt(deck.stoich_tol)}")
        if deck.c_cmax is not None:
            out.append(f"CCMAX {_fmt(deck.c_cmax)}")
        for reac in deck.reactions:
            out.append(f"RATE {_fmt(reac.a)} {_fmt(reac.ea)} {_fmt(reac.h)}")
            out.append(f"LAW {reac.law}")
            for name, coef in reac.stoich:
                out.append(f"STOICH {name} {_fmt(coef)}")
    out.append("*RELPERM-SWT")
    for row in deck.swt_rows:
        out.append(f"SAT {_fmt_seq(row)}")
    out.append("*RELPERM-SLT")
    for row in deck.slt_rows:
        out.append(f"SAT {_fmt_seq(row)}")
    ini = deck.init
    out += ["*INIT",
            f"PRES {_fmt(ini.p)}", f"TEMP {_fmt(ini.t)}",
            f"SW {_fmt(ini.s_w)}", f"SO {_fmt(ini.s_o)}", f"SG {_fmt(ini.s_g)}",
            f"XOIL {_fmt_seq(ini.x)}", f"YGAS {_fmt_seq(ini.y)}",
            f"CC {_fmt(ini.c_c)}"]
    for w in deck.wells:
        out.append("*WELL")
        out.append(f"NAME {w.name}")
        out.append(f"TYPE {w.kind}")
        out.append(f"CELL {w.i} {w.j} {w.k}")
        if w.radius is not None:
            out.append(f"RADIUS {_fmt(w.radius)}")
        if w.skin != 0.0:
            out.append(f"SKIN {_fmt(w.skin)}")
        if w.wi is not None:
            out.append(f"WI {_fmt(w.wi)}")
        if w.bhp is not None:
            out.append(f"BHP {_fmt(w.bhp)}")
        if w.rate is not None:
            key = "RATE" if w.control == "rate_gas" else "RATE_TOTAL"
            out.append(f"{key} {_fmt(w.rate)}")
        if w.rate_conditions != "standard":
            out.append(f"RATE_CONDITIONS {w.rate_conditions}")
        if w.tinj is not None:
            out.append(f"TINJ {_fmt(w.tinj)}")
        if w.yinj:
            out.append(f"YINJ {_fmt_seq(w.yinj)}")
        if w.pinjmax is not None:
            out.append(f"PINJMAX {_fmt(w.pinjmax)}")
        if w.heat_rate != 0.0:
            out.append(f"HEAT_RATE {_fmt(w.heat_rate)}")
            out.append(f"HEAT_STOP {_fmt(w.heat_stop)}")
        if w.zbh is not None:
            out.append(f"ZBH {_fmt(w.zbh)}")
    s = deck.schedule
    out.append("*SCHEDULE")
    out.append(f"END {_fmt(s.t_end)}")
    if s.report_times:
        out.append(f"REPORT {_fmt_seq(s.report_times)}")
    if s.report_interval is not None:
        out.append(f"REPORT_INTERVAL {_fmt(s.report_interval)}")
    out += [f"DTINIT {_fmt(s.dt_init)}", f"DTMIN {_fmt(s.dt_min)}",
            f"DTMAX {_fmt(s.dt_max)}"]
    sv = deck.solver
    out += ["*SOLVER",
            f"NEWTON_TOL {_fmt(sv.newton_tol)}",
            f"NEWTON_MAX {sv.newton_max}",
            f"LINEAR_TOL {_fmt(sv.linear_tol)}",
            f"LINEAR_MAX {sv.linear_max}",
            f"THREADS {sv.threads}",
            f"PRECOND {sv.precond}",
            f"EPS {_fmt(sv.eps)}",
            f"JACOBIAN {sv.jacobian}"]
    return "\n".join(out) + "\n"
