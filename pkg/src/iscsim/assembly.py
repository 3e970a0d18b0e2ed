"""Fully implicit residual and block-Jacobian assembly.

Builds, for one timestep and one Newton iterate, the block-sparse system

    J δu = −F

over per-cell unknown blocks (p, x, y, T, S_w, S_g, C_c) plus one bottom
hole pressure unknown per well. Cell blocks come from compiled kernels in
three parallel passes (cell properties, connection fluxes, per-cell
gather); well rows are assembled serially in Python on top.

Residual convention per cell block:

    F = (V/Δt)(acc − acc_old) − V·q_reac − Q_well + V·Q_loss + Σ flux_out

with phase-sum constraint rows kept unscaled. The same property kernels
serve the analytic and the numeric (central-difference) Jacobian modes, so
the two modes difference identical physics.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels, _props
from .deck import Deck
from .errors import MissingCriticalProps, NonPhysicalValue, PoreSpaceExhausted
from .grid import Grid, heat_loss_coefficients
from .units import DARCY_CONST, RANKINE_OFFSET, R_GAS_DENSITY
from .wells import CTRL_BHP, INJECTOR, Well

FD_REL_STEP = 1e-6
FD_PRESSURE_FLOOR = 1e-3
FD_UNIT_FLOOR = 5e-5


# ---------------------------------------------------------------------------
# model pack: deck models flattened into kernel-ready arrays
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelPack:
    """Flattened property constants in the kernel layouts."""

    nco: int
    ncg: int
    heavy: int
    liq: np.ndarray          # (1+nco, NLIQ)
    gasp: np.ndarray         # (nfull, NGASP)
    kv: np.ndarray           # (1+nco, 5)
    rockp: np.ndarray        # (NRK,)
    phi_ref: np.ndarray      # (ncell,)
    swt_s: np.ndarray
    swt_krw: np.ndarray
    swt_krow: np.ndarray
    swt_pcow: np.ndarray
    slt_s: np.ndarray
    slt_krg: np.ndarray
    slt_krog: np.ndarray
    slt_pcog: np.ndarray
    law_codes: np.ndarray    # (nreac,) int64
    rcoef: np.ndarray        # (nreac, 3): A, Ea, H
    nmat: np.ndarray         # (nfull+1, nreac), solid row always present
    fuel_idx: np.ndarray     # (nreac,) int64, oil-list index or -1
    ox_idx: np.ndarray       # (nreac,) int64, full-ordering index or -1
    ccmax: float
    names: Tuple[str, ...]

    @property
    def nfull(self) -> int:
        return 1 + self.nco + self.ncg

    @property
    def nequ(self) -> int:
        return self.nco + self.ncg + 5

    @property
    def row_energy(self) -> int:
        return 1 + self.nco + self.ncg


def build_pack(deck: Deck, grid: Grid) -> ModelPack:
    """Flatten deck models into the compiled kernels' array layouts."""
    fluid = deck.fluid
    rock = deck.rock_model()
    relp = deck.relperm_model()
    rm = deck.reaction_model()
    nco, ncg = fluid.nco, fluid.ncg
    nfull = 1 + nco + ncg

    liq = np.zeros((1 + nco, _kernels.NLIQ))
    for r, comp in enumerate(fluid.volatile):
        if comp.avisc is None:
            raise NonPhysicalValue(
                f"component {comp.name} needs liquid viscosity constants"
            )
        liq[r] = (
            comp.rho_ref, comp.cp, comp.ct1, comp.ct2, comp.cpt,
            comp.avisc, comp.bvisc, comp.hvr, comp.ev,
            comp.T_crit if comp.T_crit is not None else 0.0,
        )

    gasp = np.zeros((nfull, _kernels.NGASP))
    for c, comp in enumerate(fluid.gas_capable):
        volatile = comp.phase_class == "gas" or (
            comp.kv1 != 0.0 or comp.kv2 != 0.0 or comp.kv3 != 0.0
        )
        if volatile and (comp.T_crit is None or comp.p_crit is None):
            raise MissingCriticalProps(
                f"component {comp.name} can enter the gas phase but has no "
                f"critical properties"
            )
        if volatile and comp.avg is None:
            raise NonPhysicalValue(
                f"component {comp.name} can enter the gas phase but has no "
                f"gas viscosity constants"
            )
        tcr = comp.T_crit + RANKINE_OFFSET if comp.T_crit is not None else 0.0
        pc = comp.p_crit if comp.p_crit is not None else 1.0
        gasp[c] = (
            comp.M, tcr, pc,
            comp.avg if comp.avg is not None else 0.0, comp.bvg,
            comp.cpg1, comp.cpg2, comp.cpg3, comp.cpg4,
        )

    kv = np.zeros((1 + nco, 5))
    for r, comp in enumerate(fluid.volatile):
        kv[r] = (comp.kv1, comp.kv2, comp.kv3, comp.kv4, comp.kv5)

    rockp = np.zeros(_kernels.NRK)
    rockp[_kernels.RK_CPOR] = rock.cpor
    rockp[_kernels.RK_CTPOR] = rock.ctpor
    rockp[_kernels.RK_CPTPOR] = rock.cptpor
    rockp[_kernels.RK_MODE] = 1.0 if rock.porosity_mode == "nonlinear" else 0.0
    rockp[_kernels.RK_CP1] = rock.cp1
    rockp[_kernels.RK_CP2] = rock.cp2
    rockp[_kernels.RK_COKE_CP] = rock.coke_cp
    rockp[_kernels.RK_RHO_COKE] = (
        rock.rho_coke if rock.rho_coke is not None else 0.0
    )
    rockp[_kernels.RK_KTW] = rock.kt_w
    rockp[_kernels.RK_KTO] = rock.kt_o
    rockp[_kernels.RK_KTG] = rock.kt_g
    rockp[_kernels.RK_KTR] = rock.kt_rock
    rockp[_kernels.RK_KTC] = rock.kt_coke
    rockp[_kernels.RK_PREF] = rock.p_ref
    rockp[_kernels.RK_TREF] = rock.t_ref
    rockp[_kernels.RK_EPS_PER] = fluid.eps
    rockp[_kernels.RK_KROCW] = relp.krocw

    nreac = rm.nreac
    nmat = np.zeros((nfull + 1, nreac))
    nmat[: rm.nmatrix.shape[0], :] = rm.nmatrix
    rcoef = np.column_stack([rm.a, rm.ea, rm.h]) if nreac else np.zeros((0, 3))

    return ModelPack(
        nco=nco, ncg=ncg, heavy=fluid.heavy_oil_index,
        liq=liq, gasp=gasp, kv=kv, rockp=rockp,
        phi_ref=np.ascontiguousarray(grid.phi_ref, dtype=np.float64),
        swt_s=relp.swt.s, swt_krw=relp.swt.kr,
        swt_krow=relp.swt.kro, swt_pcow=relp.swt.pc,
        slt_s=relp.slt.s, slt_krg=relp.slt.kr,
        slt_krog=relp.slt.kro, slt_pcog=relp.slt.pc,
        law_codes=np.ascontiguousarray(rm.law_codes, dtype=np.int64),
        rcoef=np.ascontiguousarray(rcoef, dtype=np.float64),
        nmat=np.ascontiguousarray(nmat, dtype=np.float64),
        fuel_idx=np.ascontiguousarray(rm.fuel_index, dtype=np.int64),
        ox_idx=np.ascontiguousarray(rm.ox_index, dtype=np.int64),
        ccmax=rm.c_cmax,
        names=fluid.names,
    )


# ---------------------------------------------------------------------------
# state
# ---------------------------------------------------------------------------

@dataclass
class State:
    """Primary unknowns: per-cell block plus one bhp per well."""

    p: np.ndarray
    t: np.ndarray
    sw: np.ndarray
    sg: np.ndarray
    x: np.ndarray            # (ncell, nco)
    y: np.ndarray            # (ncell, ncg)
    cc: np.ndarray
    bhp: np.ndarray          # (nwell,)

    def copy(self) -> "State":
        return State(
            self.p.copy(), self.t.copy(), self.sw.copy(), self.sg.copy(),
            self.x.copy(), self.y.copy(), self.cc.copy(), self.bhp.copy(),
        )


def initial_state(deck: Deck, grid: Grid, wells: Sequence[Well]) -> State:
    """Uniform initial conditions; rate-well bhp starts at reservoir p."""
    n = grid.ncell
    init = deck.init
    bhp = np.empty(len(wells))
    for w, well in enumerate(wells):
        bhp[w] = well.target if well.control == CTRL_BHP else init.p
    return State(
        p=np.full(n, init.p),
        t=np.full(n, init.t),
        sw=np.full(n, init.s_w),
        sg=np.full(n, init.s_g),
        x=np.tile(np.asarray(init.x, dtype=np.float64), (n, 1)),
        y=np.tile(np.asarray(init.y, dtype=np.float64), (n, 1)),
        cc=np.full(n, init.c_c),
        bhp=bhp,
    )


# ---------------------------------------------------------------------------
# injector stream constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WellStream:
    """Injected-gas properties that depend only on the deck."""

    yfull: np.ndarray        # stream composition over the full ordering
    yinj: np.ndarray         # (ncg,)
    tinj: float
    mu: float                # stream viscosity at tinj, cp
    h: float                 # stream molar enthalpy at tinj, Btu/lbmol
    mbar: float              # stream molar mass, lb/lbmol


def build_streams(
    deck: Deck, pack: ModelPack, wells: Sequence[Well]
) -> Tuple[Optional[WellStream], ...]:
    fluid = deck.fluid
    out: List[Optional[WellStream]] = []
    for well in wells:
        if well.kind != INJECTOR or well.yinj is None:
            out.append(None)
            continue
        yinj = np.asarray(well.yinj, dtype=np.float64)
        yfull = np.zeros(pack.nfull)
        yfull[1 + pack.nco:] = yinj
        wsum = 0.0
        musum = 0.0
        h = 0.0
        mbar = 0.0
        for j, comp in enumerate(fluid.gases):
            if yinj[j] <= 0.0:
                continue
            if comp.T_crit is None or comp.p_crit is None:
                raise MissingCriticalProps(
                    f"injected component {comp.name} has no critical properties"
                )
            sq = np.sqrt(comp.M)
            mu_c, _ = _props.gas_component_viscosity(
                comp.avg, comp.bvg, well.tinj,
            )
            h_c, _ = _props.gas_enthalpy(
                comp.cpg1, comp.cpg2, comp.cpg3, comp.cpg4,
                fluid.t_ref, well.tinj,
            )
            wsum += yinj[j] * sq
            musum += yinj[j] * mu_c * sq
            h += yinj[j] * h_c
            mbar += yinj[j] * comp.M
        if wsum <= 0.0:
            raise NonPhysicalValue(
                f"well {well.name}: injected composition has no gas content"
            )
        out.append(WellStream(
            yfull=yfull, yinj=yinj, tinj=well.tinj,
            mu=musum / wsum, h=h, mbar=mbar,
        ))
    return tuple(out)


# ---------------------------------------------------------------------------
# workspace
# ---------------------------------------------------------------------------

class Workspace:
    """Preallocated property, flux, and system arrays for one grid."""

    def __init__(self, grid: Grid, pack: ModelPack, deck: Deck):
        n = grid.ncell
        m = grid.nconn
        nu = pack.nequ
        nf = pack.nfull
        self.pot = np.zeros((n, 3))
        self.dpot = np.zeros((n, 3, nu))
        self.beta = np.zeros((n, 3))
        self.dbeta = np.zeros((n, 3, nu))
        self.hph = np.zeros((n, 3))
        self.dhph = np.zeros((n, 3, nu))
        self.yfull = np.zeros((n, nf))
        self.dyfull = np.zeros((n, nf, nu))
        self.gam = np.zeros((n, 3))
        self.dgam = np.zeros((n, 3, nu))
        self.pcv = np.zeros((n, 2))
        self.dpcv = np.zeros((n, 2))
        self.kr3 = np.zeros((n, 3))
        self.dkr3 = np.zeros((n, 3, 2))
        self.ktd = np.zeros((n, 1 + nu))
        self.acc = np.zeros((n, nu))
        self.dacc = np.zeros((n, nu, nu))
        self.src = np.zeros((n, nu))
        self.dsrc = np.zeros((n, nu, nu))
        self.ok = np.zeros(n, dtype=np.uint8)
        self.flux = np.zeros((m, nu))
        self.dfa = np.zeros((m, nu, nu))
        self.dfb = np.zeros((m, nu, nu))
        self.resid = np.zeros((n, nu))
        self.diag = np.zeros((n, nu, nu))
        self.offd = np.zeros((m, 2, nu, nu))
        self.upw = np.zeros((m, 3), dtype=np.int8)

        # Darcy geometric factor with the unit constant folded in, and the
        # thermal geometric factor per connection.
        self.gd = DARCY_CONST * grid.conn_geom
        self.td = np.ascontiguousarray(grid.conn_therm, dtype=np.float64)

        # fixed-order cell -> connection adjacency (CSR)
        cells = np.concatenate([grid.conn_a, grid.conn_b])
        ics = np.concatenate([np.arange(m), np.arange(m)]).astype(np.int64)
        sides = np.concatenate([
            np.zeros(m, dtype=np.int8), np.ones(m, dtype=np.int8),
        ])
        order = np.lexsort((ics, cells))
        counts = np.bincount(cells, minlength=n)
        self.adj_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.adj_ptr[1:])
        self.adj_ids = ics[order]
        self.adj_sides = sides[order]

        area, kob, dist, rho = heat_loss_coefficients(grid, deck.heat_loss)
        self.hl_area = area
        self.hl_kob = kob
        self.hl_d = dist
        self.hl_rho = rho
        self.hl_tini = (
            deck.heat_loss.t_initial if deck.heat_loss is not None else 0.0
        )


@dataclass
class WellBlock:
    """One well's residual row and its couplings after assembly.

    comp_rates rows follow the cell residual ordering (component rows,
    energy, then zero constraint/coke slots); phase_rates columns are
    water, oil, gas. Both are positive into the reservoir.
    """

    cells: np.ndarray        # (nperf,)
    resid: float
    dwdb: float
    wrow: np.ndarray         # (nperf, nu): ∂F_well/∂u_cell
    bcol: np.ndarray         # (nperf, nu): ∂R_cell/∂bhp
    phase_rates: np.ndarray  # (nperf, 3)
    comp_rates: np.ndarray   # (nperf, nu)


# ---------------------------------------------------------------------------
# per-perforation flow terms
# ---------------------------------------------------------------------------

def _perf_producer(pack, ws, c, x_c, bhp, wi, dz):
    """Flow rows for a producing (cell-property) perforation.

    Returns (rows, drows, brows, qph, dq_sum, dq_sum_db): rows is the
    source added to the cell residual (positive into the reservoir),
    drows its derivative wrt the cell block, brows wrt bhp, qph the three
    phase rates, dq_sum/dq_sum_db the phase-total derivatives for the
    rate-control equation.
    """
    nu = pack.nequ
    nco = pack.nco
    nf = pack.nfull
    row_e = pack.row_energy
    rows = np.zeros(nu)
    drows = np.zeros((nu, nu))
    brows = np.zeros(nu)
    qph = np.zeros(3)
    dq_sum = np.zeros(nu)
    dq_sum_db = 0.0
    yf = ws.yfull[c]
    dyf = ws.dyfull[c]
    for a in range(3):
        dd = bhp - ws.pot[c, a] - ws.gam[c, a] * dz
        ddd = -ws.dpot[c, a] - dz * ws.dgam[c, a]
        cwi = DARCY_CONST * wi
        q = cwi * ws.beta[c, a] * dd
        dq = cwi * (ws.dbeta[c, a] * dd + ws.beta[c, a] * ddd)
        dq_db = cwi * ws.beta[c, a]
        qph[a] = q
        dq_sum += dq
        dq_sum_db += dq_db
        if a == 0:
            rows[0] += q
            drows[0] += dq
            brows[0] += dq_db
        elif a == 1:
            rows[1:1 + nco] += q * x_c
            drows[1:1 + nco] += np.outer(x_c, dq)
            for i in range(nco):
                drows[1 + i, 1 + i] += q
            brows[1:1 + nco] += dq_db * x_c
        else:
            rows[:nf] += q * yf
            drows[:nf] += np.outer(yf, dq) + q * dyf
            brows[:nf] += dq_db * yf
        rows[row_e] += q * ws.hph[c, a]
        drows[row_e] += dq * ws.hph[c, a] + q * ws.dhph[c, a]
        brows[row_e] += dq_db * ws.hph[c, a]
    return rows, drows, brows, qph, dq_sum, dq_sum_db


def _perf_injector(pack, ws, c, stream, bhp, wi, dz):
    """Flow rows for an injecting perforation.

    The stream enters at the cell gas-phase pressure and the well's
    injection temperature, carried by the total mobility of the cell.
    """
    nu = pack.nequ
    nco = pack.nco
    ncg = pack.ncg
    row_e = pack.row_energy
    ct = 1 + nco + ncg
    csw, csg = ct + 1, ct + 2

    lam = ws.kr3[c, 0] + ws.kr3[c, 1] + ws.kr3[c, 2]
    dlam = np.zeros(nu)
    dlam[csw] = ws.dkr3[c, 0, 0] + ws.dkr3[c, 1, 0]
    dlam[csg] = ws.dkr3[c, 1, 1] + ws.dkr3[c, 2, 1]

    pg = ws.pot[c, 2]
    dpg = ws.dpot[c, 2]
    dzdw = np.zeros(pack.nfull)
    z, dzdp, _ = _props.z_factor_mix(
        stream.yfull, pack.gasp[:, _kernels.GASP_TCR],
        pack.gasp[:, _kernels.GASP_PC], pg, stream.tinj, dzdw,
    )
    trs = stream.tinj + RANKINE_OFFSET
    rho = pg / (z * R_GAS_DENSITY * trs)
    drho_dpg = rho * (1.0 / pg - dzdp / z)
    gam = rho * stream.mbar / 144.0
    dgam_dpg = drho_dpg * stream.mbar / 144.0

    dd = bhp - pg - gam * dz
    ddd = -dpg * (1.0 + dz * dgam_dpg)
    cwi = DARCY_CONST * wi
    mob = rho * lam / stream.mu
    dmob = (drho_dpg * dpg * lam + rho * dlam) / stream.mu
    q = cwi * mob * dd
    dq = cwi * (dmob * dd + mob * ddd)
    dq_db = cwi * mob

    rows = np.zeros(nu)
    drows = np.zeros((nu, nu))
    brows = np.zeros(nu)
    rows[1 + nco:1 + nco + ncg] = q * stream.yinj
    drows[1 + nco:1 + nco + ncg] = np.outer(stream.yinj, dq)
    brows[1 + nco:1 + nco + ncg] = dq_db * stream.yinj
    rows[row_e] = q * stream.h
    drows[row_e] = dq * stream.h
    brows[row_e] = dq_db * stream.h
    qph = np.array([0.0, 0.0, q])
    return rows, drows, brows, qph, dq, dq_db


def _well_pass(pack, grid, ws, wells, streams, state, capped, t_new):
    """Add well terms to cell rows; build each well's residual block."""
    blocks: List[WellBlock] = []
    nu = pack.nequ
    row_e = pack.row_energy
    for wix, well in enumerate(wells):
        bhp = state.bhp[wix]
        nperf = len(well.perfs)
        wrow = np.zeros((nperf, nu))
        bcol = np.zeros((nperf, nu))
        phase_rates = np.zeros((nperf, 3))
        comp_rates = np.zeros((nperf, nu))
        qsum = 0.0
        dqsum_db = 0.0
        heater_on = well.heat_rate != 0.0 and t_new <= well.heat_stop
        for pix, perf in enumerate(well.perfs):
            c = perf.cell
            dz = perf.z_bh - grid.depth[c]
            if well.kind == INJECTOR:
                rows, drows, brows, qph, dqs, dqs_db = _perf_injector(
                    pack, ws, c, streams[wix], bhp, perf.wi, dz,
                )
            else:
                rows, drows, brows, qph, dqs, dqs_db = _perf_producer(
                    pack, ws, c, state.x[c], bhp, perf.wi, dz,
                )
            ws.resid[c] -= rows
            ws.diag[c] -= drows
            bcol[pix] = -brows
            wrow[pix] = dqs
            phase_rates[pix] = qph
            comp_rates[pix] = rows
            qsum += qph.sum()
            dqsum_db += dqs_db
            if heater_on:
                ws.resid[c, row_e] -= well.heat_rate
                comp_rates[pix, row_e] += well.heat_rate
        if well.control == CTRL_BHP:
            resid_w = bhp - well.target
            wrow[:] = 0.0
            dwdb = 1.0
        elif capped[wix]:
            resid_w = bhp - well.pinjmax
            wrow[:] = 0.0
            dwdb = 1.0
        else:
            resid_w = qsum - well.target
            dwdb = dqsum_db
        blocks.append(WellBlock(
            cells=np.array([p.cell for p in well.perfs], dtype=np.int64),
            resid=resid_w, dwdb=dwdb, wrow=wrow, bcol=bcol,
            phase_rates=phase_rates, comp_rates=comp_rates,
        ))
    return blocks


# ---------------------------------------------------------------------------
# assembly driver
# ---------------------------------------------------------------------------

def _run_cell_pass(pack, ws, state):
    _kernels.cell_pass(
        pack.nco, pack.ncg, pack.heavy,
        state.p, state.t, state.sw, state.sg, state.x, state.y, state.cc,
        pack.liq, pack.gasp, pack.kv, pack.rockp, pack.phi_ref,
        pack.swt_s, pack.swt_krw, pack.swt_krow, pack.swt_pcow,
        pack.slt_s, pack.slt_krg, pack.slt_krog, pack.slt_pcog,
        pack.law_codes, pack.rcoef, pack.nmat,
        pack.fuel_idx, pack.ox_idx, pack.ccmax,
        ws.pot, ws.dpot, ws.beta, ws.dbeta, ws.hph, ws.dhph,
        ws.yfull, ws.dyfull, ws.gam, ws.dgam, ws.pcv, ws.dpcv,
        ws.kr3, ws.dkr3, ws.ktd,
        ws.acc, ws.dacc, ws.src, ws.dsrc, ws.ok,
    )
    if not ws.ok.all():
        cell = int(np.argmin(ws.ok))
        raise PoreSpaceExhausted(
            f"coke fills the pore volume in cell {cell}"
        )


def snapshot_accumulation(pack, ws, state) -> np.ndarray:
    """Per-cell accumulation vector of a (converged) state, copied out."""
    _run_cell_pass(pack, ws, state)
    return ws.acc.copy()


def assemble(grid, pack, ws, wells, streams, state, accn, dt, t_new,
             capped, jacobian="analytic", freeze_upwind=False):
    """Residual and Jacobian at `state`; returns the well blocks.

    `accn` is the accumulation snapshot of the previous timestep state,
    `t_new` the time being stepped to (drives heater cutoffs), `capped`
    the per-well frozen constraint switches for this Newton iteration.
    With `freeze_upwind` the per-phase upstream directions stored by the
    previous call are reused instead of being rechosen, which removes
    the flux kink when a phase potential difference crosses zero.
    """
    _run_cell_pass(pack, ws, state)
    _kernels.compose_pass(
        pack.nco, pack.ncg, ws.resid, ws.diag, ws.acc, ws.dacc,
        ws.src, ws.dsrc, accn, grid.volume, dt, state.t,
        ws.hl_area, ws.hl_kob, ws.hl_d, ws.hl_rho, ws.hl_tini,
    )
    _kernels.conn_pass(
        pack.nco, pack.ncg, grid.conn_a, grid.conn_b, ws.gd, ws.td,
        grid.depth, state.t, state.x,
        ws.pot, ws.dpot, ws.beta, ws.dbeta, ws.hph, ws.dhph,
        ws.yfull, ws.dyfull, ws.gam, ws.dgam, ws.ktd,
        ws.upw, freeze_upwind,
        ws.flux, ws.dfa, ws.dfb,
    )
    _kernels.gather_pass(
        ws.adj_ptr, ws.adj_ids, ws.adj_sides, ws.flux, ws.dfa, ws.dfb,
        ws.resid, ws.diag, ws.offd,
    )
    blocks = _well_pass(
        pack, grid, ws, wells, streams, state, capped, t_new,
    )
    if jacobian == "numeric":
        _numeric_jacobian(
            grid, pack, ws, wells, streams, state, accn, dt, t_new,
            capped, blocks, freeze_upwind,
        )
    return blocks


# ---------------------------------------------------------------------------
# numeric Jacobian (central differences over the same evaluators)
# ---------------------------------------------------------------------------

class _CellBufs:
    """Scratch output buffers for a single-cell evaluation."""

    def __init__(self, pack):
        nu = pack.nequ
        nf = pack.nfull
        self.pot = np.zeros(3)
        self.dpot = np.zeros((3, nu))
        self.beta = np.zeros(3)
        self.dbeta = np.zeros((3, nu))
        self.hph = np.zeros(3)
        self.dhph = np.zeros((3, nu))
        self.yfull = np.zeros(nf)
        self.dyfull = np.zeros((nf, nu))
        self.gam = np.zeros(3)
        self.dgam = np.zeros((3, nu))
        self.pcv = np.zeros(2)
        self.dpcv = np.zeros(2)
        self.kr3 = np.zeros(3)
        self.dkr3 = np.zeros((3, 2))
        self.ktd = np.zeros(1 + nu)
        self.acc = np.zeros(nu)
        self.dacc = np.zeros((nu, nu))
        self.src = np.zeros(nu)
        self.dsrc = np.zeros((nu, nu))


class _ShadowCell:
    """Expose one perturbed cell's buffers under the Workspace interface.

    Index [c] resolves to the scratch buffers so the perforation helpers
    evaluate the perturbed properties without copying them into the
    workspace.
    """

    class _One:
        def __init__(self, arr):
            self._arr = arr

        def __getitem__(self, key):
            if isinstance(key, tuple):
                return self._arr[key[1:]] if len(key) > 1 else self._arr
            return self._arr

    def __init__(self, bufs):
        self.pot = self._One(bufs.pot)
        self.dpot = self._One(bufs.dpot)
        self.beta = self._One(bufs.beta)
        self.dbeta = self._One(bufs.dbeta)
        self.hph = self._One(bufs.hph)
        self.dhph = self._One(bufs.dhph)
        self.yfull = self._One(bufs.yfull)
        self.dyfull = self._One(bufs.dyfull)
        self.gam = self._One(bufs.gam)
        self.dgam = self._One(bufs.dgam)
        self.pcv = self._One(bufs.pcv)
        self.dpcv = self._One(bufs.dpcv)
        self.kr3 = self._One(bufs.kr3)
        self.dkr3 = self._One(bufs.dkr3)


def _eval_cell(pack, bufs, p, t, sw, sg, x, y, cc, phi_ref_c):
    ok, _ = _kernels.cell_eval(
        pack.nco, pack.ncg, pack.heavy,
        p, t, sw, sg, x, y, cc,
        pack.liq, pack.gasp, pack.kv, pack.rockp, phi_ref_c,
        pack.swt_s, pack.swt_krw, pack.swt_krow, pack.swt_pcow,
        pack.slt_s, pack.slt_krg, pack.slt_krog, pack.slt_pcog,
        pack.law_codes, pack.rcoef, pack.nmat,
        pack.fuel_idx, pack.ox_idx, pack.ccmax,
        bufs.pot, bufs.dpot, bufs.beta, bufs.dbeta, bufs.hph, bufs.dhph,
        bufs.yfull, bufs.dyfull, bufs.gam, bufs.dgam, bufs.pcv, bufs.dpcv,
        bufs.kr3, bufs.dkr3, bufs.ktd,
        bufs.acc, bufs.dacc, bufs.src, bufs.dsrc,
    )
    if not ok:
        raise PoreSpaceExhausted(
            "coke fills the pore volume at a probed state"
        )


def _cell_unknowns(state, c, pack):
    """The cell's unknown column values in block order."""
    vals = np.empty(pack.nequ)
    vals[0] = state.p[c]
    vals[1:1 + pack.nco] = state.x[c]
    vals[1 + pack.nco:1 + pack.nco + pack.ncg] = state.y[c]
    ct = 1 + pack.nco + pack.ncg
    vals[ct] = state.t[c]
    vals[ct + 1] = state.sw[c]
    vals[ct + 2] = state.sg[c]
    vals[ct + 3] = state.cc[c]
    return vals


def _apply_unknown(scal, u, val, pack):
    """Write one unknown into the scalar-state dict for a probe."""
    ct = 1 + pack.nco + pack.ncg
    if u == 0:
        scal["p"] = val
    elif u < 1 + pack.nco:
        scal["x"][u - 1] = val
    elif u < ct:
        scal["y"][u - 1 - pack.nco] = val
    elif u == ct:
        scal["t"] = val
    elif u == ct + 1:
        scal["sw"] = val
    elif u == ct + 2:
        scal["sg"] = val
    else:
        scal["cc"] = val


def _probe_rows(grid, pack, ws, wells, streams, state, accn, dt, t_new,
                c, scal, bufs, conn_flux, conn_rows, freeze):
    """Residual rows of cell c and its neighbors at a probed cell state.

    Returns (rows_c, fw_parts): the neighbor rows are written into
    conn_rows keyed by adjacency slot; fw_parts maps well index to the
    perforation-rate part of the well equation.  Probes write upstream
    choices into a scratch copy so the stored flags stay those of the
    unperturbed assemble.
    """
    nu = pack.nequ
    row_e = pack.row_energy
    row_os = row_e + 1
    row_gs = row_e + 2
    _eval_cell(
        pack, bufs, scal["p"], scal["t"], scal["sw"], scal["sg"],
        scal["x"], scal["y"], scal["cc"], pack.phi_ref[c],
    )
    vdt = grid.volume[c] / dt
    rows = vdt * (bufs.acc - accn[c]) - grid.volume[c] * bufs.src
    rows[row_os] = bufs.acc[row_os]
    rows[row_gs] = bufs.acc[row_gs]
    if ws.hl_area[c] > 0.0:
        rows[row_e] += ws.hl_area[c] * ws.hl_kob * (
            (scal["t"] - ws.hl_tini) / ws.hl_d - ws.hl_rho
        )

    dummy_a = np.zeros((nu, nu))
    dummy_b = np.zeros((nu, nu))
    for slot, n in enumerate(range(ws.adj_ptr[c], ws.adj_ptr[c + 1])):
        ic = ws.adj_ids[n]
        a = grid.conn_a[ic]
        b = grid.conn_b[ic]
        upw_probe = ws.upw[ic].copy()
        if ws.adj_sides[n] == 0:
            _kernels.conn_eval(
                pack.nco, pack.ncg, ws.gd[ic], ws.td[ic],
                grid.depth[a], grid.depth[b], scal["t"], state.t[b],
                bufs.pot, bufs.dpot, bufs.beta, bufs.dbeta,
                bufs.hph, bufs.dhph, bufs.yfull, bufs.dyfull,
                scal["x"], bufs.gam, bufs.dgam, bufs.ktd,
                ws.pot[b], ws.dpot[b], ws.beta[b], ws.dbeta[b],
                ws.hph[b], ws.dhph[b], ws.yfull[b], ws.dyfull[b],
                state.x[b], ws.gam[b], ws.dgam[b], ws.ktd[b],
                upw_probe, freeze,
                conn_flux, dummy_a, dummy_b,
            )
            rows += conn_flux
            conn_rows[slot] = -conn_flux
        else:
            _kernels.conn_eval(
                pack.nco, pack.ncg, ws.gd[ic], ws.td[ic],
                grid.depth[a], grid.depth[b], state.t[a], scal["t"],
                ws.pot[a], ws.dpot[a], ws.beta[a], ws.dbeta[a],
                ws.hph[a], ws.dhph[a], ws.yfull[a], ws.dyfull[a],
                state.x[a], ws.gam[a], ws.dgam[a], ws.ktd[a],
                bufs.pot, bufs.dpot, bufs.beta, bufs.dbeta,
                bufs.hph, bufs.dhph, bufs.yfull, bufs.dyfull,
                scal["x"], bufs.gam, bufs.dgam, bufs.ktd,
                upw_probe, freeze,
                conn_flux, dummy_a, dummy_b,
            )
            rows -= conn_flux
            conn_rows[slot] = conn_flux.copy()

    shadow = _ShadowCell(bufs)
    fw_parts = {}
    for wix, well in enumerate(wells):
        for perf in well.perfs:
            if perf.cell != c:
                continue
            dz = perf.z_bh - grid.depth[c]
            if well.kind == INJECTOR:
                prow, _, _, qph, _, _ = _perf_injector(
                    pack, shadow, c, streams[wix], state.bhp[wix],
                    perf.wi, dz,
                )
            else:
                prow, _, _, qph, _, _ = _perf_producer(
                    pack, shadow, c, scal["x"], state.bhp[wix],
                    perf.wi, dz,
                )
            rows -= prow
            fw_parts[wix] = fw_parts.get(wix, 0.0) + qph.sum()
    return rows, fw_parts


def _fd_points(pack, base, u, sw, sg):
    """Probe values (vp, vm) for unknown u whose current value is base[u].

    Central differences by default, with a pressure-scaled step for p and
    bhp and a flat floor for the unit-scaled unknowns (the energy rows sum
    terms orders of magnitude larger than some cross-derivatives, so tiny
    steps drown in rounding). Shifts to a one-sided difference when the
    step would leave the physical box (negative fraction, saturation, or
    coke concentration; fraction above one; oil saturation pushed below
    zero), because the evaluators clamp there and the kink would corrupt
    the estimate.
    """
    ct = 1 + pack.nco + pack.ncg
    v = base[u]
    if u == 0:
        h = max(FD_REL_STEP * abs(v), FD_PRESSURE_FLOOR)
        return v + h, v - h
    h = max(FD_REL_STEP * abs(v), FD_UNIT_FLOOR)
    if u == ct:
        return v + h, v - h
    if u == ct + 1 or u == ct + 2:
        if v - h < 0.0:
            return v + h, v
        if 1.0 - sw - sg - h < 0.0:
            return v, v - h
        return v + h, v - h
    if u == ct + 3:
        if v - h < 0.0:
            return v + h, v
        return v + h, v - h
    if v - h < 0.0:
        return v + h, v
    if v + h > 1.0:
        return v, v - h
    return v + h, v - h


def _numeric_jacobian(grid, pack, ws, wells, streams, state, accn, dt,
                      t_new, capped, blocks, freeze=False):
    """Replace every Jacobian block with finite differences.

    Probe points come from _fd_points per cell unknown; well bhp columns
    use a pressure-scaled central step. Residual values stay those of the
    analytic pass.
    """
    nu = pack.nequ
    bufs = _CellBufs(pack)
    conn_flux = np.zeros(nu)
    rate_wells = {
        wix for wix, w in enumerate(wells)
        if w.control != CTRL_BHP and not capped[wix]
    }
    perf_lookup = {}
    for wix, well in enumerate(wells):
        for pix, perf in enumerate(well.perfs):
            perf_lookup.setdefault(perf.cell, []).append((wix, pix))

    for c in range(grid.ncell):
        base = _cell_unknowns(state, c, pack)
        nadj = int(ws.adj_ptr[c + 1] - ws.adj_ptr[c])
        conn_rows_p = [np.zeros(nu) for _ in range(nadj)]
        conn_rows_m = [np.zeros(nu) for _ in range(nadj)]
        for u in range(nu):
            vp, vm = _fd_points(pack, base, u, state.sw[c], state.sg[c])
            scal = {
                "p": state.p[c], "t": state.t[c], "sw": state.sw[c],
                "sg": state.sg[c], "cc": state.cc[c],
                "x": state.x[c].copy(), "y": state.y[c].copy(),
            }
            _apply_unknown(scal, u, vp, pack)
            rows_p, fw_p = _probe_rows(
                grid, pack, ws, wells, streams, state, accn, dt, t_new,
                c, scal, bufs, conn_flux, conn_rows_p, freeze,
            )
            _apply_unknown(scal, u, vm, pack)
            rows_m, fw_m = _probe_rows(
                grid, pack, ws, wells, streams, state, accn, dt, t_new,
                c, scal, bufs, conn_flux, conn_rows_m, freeze,
            )
            inv2h = 1.0 / (vp - vm)
            ws.diag[c][:, u] = (rows_p - rows_m) * inv2h
            for slot, n in enumerate(range(ws.adj_ptr[c], ws.adj_ptr[c + 1])):
                ic = ws.adj_ids[n]
                side = 1 if ws.adj_sides[n] == 0 else 0
                ws.offd[ic, side][:, u] = (
                    (conn_rows_p[slot] - conn_rows_m[slot]) * inv2h
                )
            for wix, pix in perf_lookup.get(c, ()):
                if wix in rate_wells:
                    blocks[wix].wrow[pix, u] = (
                        (fw_p.get(wix, 0.0) - fw_m.get(wix, 0.0)) * inv2h
                    )
                else:
                    blocks[wix].wrow[pix, u] = 0.0

    # bhp columns
    for wix, well in enumerate(wells):
        h = max(FD_REL_STEP * abs(state.bhp[wix]), FD_PRESSURE_FLOOR)
        for pix, perf in enumerate(well.perfs):
            c = perf.cell
            dz = perf.z_bh - grid.depth[c]
            outs = []
            for bhp in (state.bhp[wix] + h, state.bhp[wix] - h):
                if well.kind == INJECTOR:
                    prow, _, _, qph, _, _ = _perf_injector(
                        pack, ws, c, streams[wix], bhp, perf.wi, dz,
                    )
                else:
                    prow, _, _, qph, _, _ = _perf_producer(
                        pack, ws, c, state.x[c], bhp, perf.wi, dz,
                    )
                outs.append((prow, qph.sum()))
            inv2h = 0.5 / h
            blocks[wix].bcol[pix] = -(outs[0][0] - outs[1][0]) * inv2h
        if well.control == CTRL_BHP or capped[wix]:
            blocks[wix].dwdb = 1.0
        else:
            dq = 0.0
            for pix, perf in enumerate(well.perfs):
                c = perf.cell
                dz = perf.z_bh - grid.depth[c]
                qs = []
                for bhp in (state.bhp[wix] + h, state.bhp[wix] - h):
                    if well.kind == INJECTOR:
                        _, _, _, qph, _, _ = _perf_injector(
                            pack, ws, c, streams[wix], bhp, perf.wi, dz,
                        )
                    else:
                        _, _, _, qph, _, _ = _perf_producer(
                            pack, ws, c, state.x[c], bhp, perf.wi, dz,
                        )
                    qs.append(qph.sum())
                dq += (qs[0] - qs[1]) * 0.5 / h
            blocks[wix].dwdb = dq


def check_jacobian(grid, pack, ws, wells, streams, state, accn, dt, t_new,
                   capped):
    """Max scaled mismatch between analytic and numeric Jacobian blocks.

    Every element is compared as |analytic − numeric| / max(1, |analytic|);
    returns the worst value over diagonal, off-diagonal, and well blocks.
    """
    blocks = assemble(
        grid, pack, ws, wells, streams, state, accn, dt, t_new, capped,
        jacobian="analytic",
    )
    diag_a = ws.diag.copy()
    offd_a = ws.offd.copy()
    wrow_a = [b.wrow.copy() for b in blocks]
    bcol_a = [b.bcol.copy() for b in blocks]
    dwdb_a = [b.dwdb for b in blocks]
    _numeric_jacobian(
        grid, pack, ws, wells, streams, state, accn, dt, t_new, capped,
        blocks,
    )

    def scaled(a, n):
        return np.max(np.abs(a - n) / np.maximum(1.0, np.abs(a))) \
            if a.size else 0.0

    worst = max(scaled(diag_a, ws.diag), scaled(offd_a, ws.offd))
    for wix, b in enumerate(blocks):
        worst = max(worst, scaled(wrow_a[wix], b.wrow))
        worst = max(worst, scaled(bcol_a[wix], b.bcol))
        worst = max(
            worst,
            abs(dwdb_a[wix] - b.dwdb) / max(1.0, abs(dwdb_a[wix])),
        )
    # restore analytic blocks
    ws.diag[:] = diag_a
    ws.offd[:] = offd_a
    for wix, b in enumerate(blocks):
        b.wrow[:] = wrow_a[wix]
        b.bcol[:] = bcol_a[wix]
        b.dwdb = dwdb_a[wix]
    return worst
