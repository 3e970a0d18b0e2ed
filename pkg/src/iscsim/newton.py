"""Newton outer loop, saturation damping, and the adaptive time marcher.

Each timestep solves the fully implicit system with damped Newton
iterations.  The loop is check-first: the residual is assembled and
tested before any linear solve, so the reported iteration count equals
the number of residual evaluations and a state that already satisfies
the equations converges in one iteration with zero solves.

Saturation updates are damped so phases vanish and reappear smoothly:
a raw target below zero lands at sqrt(eps * S_old), a raw target in
[0, eps) halves the old value, and anything else is taken as is.  Mole
fractions are clipped to [0, 1] and the coke concentration floored at
zero; the sum constraints pull clipped values back during later
iterations.

Late iterations freeze the per-phase upstream directions chosen by the
earlier ones.  Near steady flow a phase potential difference can sit at
zero, and rechoosing the flow direction every iteration turns Newton
into a limit cycle across the flux kink; pinning the directions makes
the remaining problem smooth, and the flux error of a pinned direction
vanishes with the potential difference that caused it.

The time marcher grows the step after quick convergence, cuts it in
half when a step fails (divergence, singular block, linear-solver
breakdown, or a physics guard), lands exactly on forced times (report
times, heater shut-offs, end of run), and keeps a per-component
conservation audit over the accepted steps.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numba
import numpy as np

from .assembly import (State, WellBlock, Workspace, assemble, build_pack,
                       build_streams, initial_state)
from .deck import Deck
from .errors import (
    Breakdown,
    DegenerateTemperature,
    DivergedResidual,
    MaxIterations,
    PoreSpaceExhausted,
    SimulationStalled,
    SingularCellBlock,
)
from .grid import Grid, build_grid
from .linsolve import BlockSolver
from .wells import CTRL_BHP, INJECTOR, Well, build_wells

GROWTH_FACTOR = 2.0
CUT_FACTOR = 0.5
FAST_ITERS = 4
FREEZE_UPWIND_AFTER = 5
_TIME_EPS = 1e-9


def damp_saturation(old: float, raw: float, eps: float) -> float:
    """Damped saturation target for one phase.

    Negative raw targets land at sqrt(eps * old) so a vanishing phase
    approaches zero geometrically instead of oscillating; a collapse
    from at or above eps into [0, eps) halves the old value instead of
    jumping.  Adjustments that start inside the sliver, and all upward
    moves, are taken raw: overriding Newton's small corrections there
    turns the iteration into a limit cycle instead of damping it.
    """
    if raw < 0.0:
        return math.sqrt(eps * old) if old > 0.0 else 0.0
    if raw < eps <= old:
        return 0.5 * old
    return raw


def _damp_array(old: np.ndarray, raw: np.ndarray, eps: float) -> np.ndarray:
    """Vectorized damp_saturation over cell arrays."""
    out = raw.copy()
    neg = raw < 0.0
    if np.any(neg):
        out[neg] = np.sqrt(eps * np.maximum(old[neg], 0.0))
    halve = ~neg & (raw < eps) & (old >= eps)
    if np.any(halve):
        out[halve] = 0.5 * old[halve]
    return out


def apply_update(state: State, du: np.ndarray, dbhp: np.ndarray,
                 nco: int, ncg: int, eps: float) -> State:
    """Return the damped, bounded state after one Newton update.

    du has one row per cell ordered [p, x, y, T, S_w, S_g, C_c]; dbhp
    has one entry per well.  Saturations are damped per phase with the
    oil correction absorbed by gas, fractions clipped to [0, 1], coke
    floored at zero, and temperature kept above absolute zero.
    """
    new = state.copy()
    ct = 1 + nco + ncg
    new.p += du[:, 0]
    new.x = np.clip(new.x + du[:, 1:1 + nco], 0.0, 1.0)
    new.y = np.clip(new.y + du[:, 1 + nco:ct], 0.0, 1.0)
    new.t = np.maximum(new.t + du[:, ct], -459.0)
    new.cc = np.maximum(new.cc + du[:, ct + 3], 0.0)
    so_old = 1.0 - state.sw - state.sg
    sw = _damp_array(state.sw, state.sw + du[:, ct + 1], eps)
    sg = _damp_array(state.sg, state.sg + du[:, ct + 2], eps)
    so = _damp_array(so_old, 1.0 - sw - sg, eps)
    sg = 1.0 - sw - so
    neg = sg < 0.0
    if np.any(neg):
        sg[neg] = _damp_array(state.sg, sg, eps)[neg]
    sw = np.clip(sw, 0.0, 1.0)
    sg = np.clip(sg, 0.0, 1.0 - sw)
    new.sw = sw
    new.sg = sg
    new.bhp = state.bhp + dbhp
    return new


def scaled_norm(ws: Workspace, accn: np.ndarray, volume: np.ndarray,
                dt: float, blocks: Sequence[WellBlock],
                wells: Sequence[Well], capped: np.ndarray,
                row_os: int, row_gs: int) -> float:
    """Scaled max-norm of the coupled residual.

    Mass and energy rows are scaled by (V/dt) * max(1, |old
    accumulation|), the mole-fraction sum constraints by one, and each
    well equation by max(1, |its target|).
    """
    scale = (volume / dt)[:, None] * np.maximum(1.0, np.abs(accn))
    scale[:, row_os] = 1.0
    scale[:, row_gs] = 1.0
    norm = float(np.max(np.abs(ws.resid) / scale))
    for w, (well, blk) in enumerate(zip(wells, blocks)):
        if capped[w]:
            target = well.pinjmax
        else:
            target = well.target
        norm = max(norm, abs(blk.resid) / max(1.0, abs(target)))
    return norm


def desired_capped(wells: Sequence[Well], capped: np.ndarray,
                   state: State, blocks: Sequence[WellBlock]) -> np.ndarray:
    """Active-set choice for rate injectors with a pressure cap.

    An uncapped injector whose bottom-hole pressure exceeds the cap is
    switched onto the cap; a capped injector that delivers more than
    its rate target at the cap is released.  Producers and plain bhp
    wells never switch.
    """
    want = capped.copy()
    for w, well in enumerate(wells):
        if well.kind != INJECTOR or well.control == CTRL_BHP:
            continue
        if not math.isfinite(well.pinjmax):
            continue
        if capped[w]:
            delivered = float(np.sum(blocks[w].phase_rates))
            if delivered > well.target:
                want[w] = False
        elif state.bhp[w] > well.pinjmax:
            want[w] = True
    return want


@dataclass
class StepRecord:
    """Accounting for one accepted timestep."""

    time: float
    dt: float
    newton: int
    linear: int
    solves: int
    balance: float


@dataclass
class TimestepController:
    """Adaptive step size: grow after fast convergence, halve on failure."""

    dt: float
    dt_min: float
    dt_max: float
    growth: float = GROWTH_FACTOR
    cut: float = CUT_FACTOR

    def propose(self, t: float, forced: Sequence[float]) -> float:
        """Step to attempt from time t, landing exactly on forced times."""
        dt = min(self.dt, self.dt_max)
        for ft in forced:
            if ft > t + _TIME_EPS:
                dt = min(dt, ft - t)
                break
        return dt

    def on_success(self, iters: int) -> None:
        if iters <= FAST_ITERS:
            self.dt = min(self.dt * self.growth, self.dt_max)

    def on_failure(self, attempted: float, t: float, reason: str) -> None:
        if attempted <= self.dt_min * (1.0 + 1e-9):
            raise SimulationStalled(
                f"timestep {attempted:g} at t={t:g} failed ({reason}) "
                f"and is already at the minimum {self.dt_min:g}")
        self.dt = max(attempted * self.cut, self.dt_min)


class Simulator:
    """Owns the discrete system and marches it through the schedule."""

    def __init__(self, deck: Deck, threads: Optional[int] = None,
                 jacobian: Optional[str] = None):
        self.deck = deck
        self.grid: Grid = build_grid(deck.grid, deck.rock)
        self.pack = build_pack(deck, self.grid)
        self.wells: Tuple[Well, ...] = build_wells(deck, self.grid)
        self.streams = build_streams(deck, self.pack, self.wells)
        self.ws = Workspace(self.grid, self.pack, deck)
        self.threads = int(threads) if threads else int(deck.solver.threads)
        numba.set_num_threads(
            min(max(1, self.threads), numba.config.NUMBA_NUM_THREADS))
        self.jacobian = jacobian or deck.solver.jacobian
        self.solver = BlockSolver(
            self.grid, self.ws,
            tol=deck.solver.linear_tol,
            maxiter=deck.solver.linear_max,
            precond=deck.solver.precond,
        )
        self.state: State = initial_state(deck, self.grid, self.wells)
        self.capped = np.zeros(len(self.wells), dtype=bool)
        self.time = 0.0
        self.blocks: List[WellBlock] = []
        self.accn = self._snapshot(self.state)
        self.steps: List[StepRecord] = []
        self.cum_rates = np.zeros((len(self.wells), 3))
        self.cum_imbalance = np.zeros(self.pack.nfull + 1)
        self.cum_throughput = np.zeros(self.pack.nfull + 1)
        self.work_seconds = 0.0

    def _snapshot(self, state: State) -> np.ndarray:
        """Per-cell accumulation vector of a state, for the time term."""
        zero = np.zeros((self.grid.ncell, self.pack.nequ))
        self.blocks = assemble(self.grid, self.pack, self.ws, self.wells,
                               self.streams, state, zero, 1.0, 0.0,
                               self.capped)
        return self.ws.acc.copy()

    def newton_step(self, state: State, dt: float, t_new: float,
                    capped: np.ndarray
                    ) -> Tuple[State, bool, int, int, int, np.ndarray]:
        """One damped Newton solve of the implicit system over dt.

        Returns (state, converged, iterations, linear iterations,
        linear solves, capped flags).  The iteration count equals the
        number of residual evaluations; on failure the original state
        is returned untouched.  Raises DivergedResidual after three
        consecutive residual increases (NaN counts as an increase).
        """
        pack, grid = self.pack, self.grid
        tol = self.deck.solver.newton_tol
        max_iter = self.deck.solver.newton_max
        work = state
        capped = capped.copy()
        lin_total = 0
        solves = 0
        prev = math.inf
        growths = 0
        for it in range(1, max_iter + 1):
            t0 = _time.perf_counter()
            blocks = assemble(grid, pack, self.ws, self.wells, self.streams,
                              work, self.accn, dt, t_new, capped,
                              jacobian=self.jacobian,
                              freeze_upwind=(it > FREEZE_UPWIND_AFTER))
            self.work_seconds += _time.perf_counter() - t0
            norm = scaled_norm(self.ws, self.accn, grid.volume, dt, blocks,
                               self.wells, capped, pack.row_energy + 1,
                               pack.row_energy + 2)
            if not math.isfinite(norm) or norm > prev:
                growths += 1
                if growths >= 3:
                    raise DivergedResidual(
                        f"residual grew {growths} consecutive iterations "
                        f"(now {norm:g}) at t={t_new:g}")
            else:
                growths = 0
            if math.isfinite(norm):
                prev = norm
            want = desired_capped(self.wells, capped, work, blocks)
            if not np.array_equal(want, capped):
                capped = want
                continue
            if norm <= tol:
                self.blocks = blocks
                return work, True, it, lin_total, solves, capped
            if it == max_iter:
                break
            t0 = _time.perf_counter()
            du, dbhp, iters = self.solver.solve(blocks)
            self.work_seconds += _time.perf_counter() - t0
            lin_total += iters
            solves += 1
            work = apply_update(work, du, dbhp, pack.nco, pack.ncg,
                                self.deck.solver.eps)
        return state, False, max_iter, lin_total, solves, capped

    def forced_times(self) -> List[float]:
        """Report times, heater shut-offs, and the end of the run."""
        sched = self.deck.schedule
        times = set()
        for rt in self.report_times():
            if rt > _TIME_EPS:
                times.add(rt)
        for well in self.wells:
            if well.heat_rate and 0.0 < well.heat_stop < sched.t_end:
                times.add(well.heat_stop)
        times.add(sched.t_end)
        return sorted(times)

    def report_times(self) -> List[float]:
        """Times at which a report frame is written (end of run always)."""
        sched = self.deck.schedule
        times = set()
        if sched.report_times:
            times.update(t for t in sched.report_times
                         if 0.0 <= t <= sched.t_end + _TIME_EPS)
        if sched.report_interval:
            n = int(math.floor(sched.t_end / sched.report_interval
                               + _TIME_EPS))
            times.update(k * sched.report_interval for k in range(1, n + 1))
        times.add(sched.t_end)
        return sorted(times)

    def audit_step(self, dt: float) -> float:
        """Per-step global balance check over mass rows.

        Accumulation change over the step must equal dt times wells
        plus reactions for every molar component (fluxes cancel by
        antisymmetry).  Returns the worst scaled imbalance and folds
        the step into the cumulative audit.
        """
        pack, grid = self.pack, self.grid
        rows = list(range(pack.nfull)) + [pack.nequ - 1]
        vol = grid.volume
        worst = 0.0
        for k, r in enumerate(rows):
            dacc = float(np.dot(vol, self.ws.acc[:, r] - self.accn[:, r]))
            reac = float(np.dot(vol, self.ws.src[:, r]))
            wellq = 0.0
            wellabs = 0.0
            for blk in self.blocks:
                q = float(np.sum(blk.comp_rates[:, r]))
                wellq += q
                wellabs += abs(q)
            imb = dacc - dt * (reac + wellq)
            scale = max(1.0, float(np.dot(vol, np.abs(self.ws.acc[:, r]))))
            worst = max(worst, abs(imb) / scale)
            self.cum_imbalance[k] += imb
            self.cum_throughput[k] += dt * (wellabs
                                            + abs(reac))
        return worst

    def cumulative_imbalance(self) -> float:
        """End-of-run conservation error relative to total throughput."""
        return float(np.max(np.abs(self.cum_imbalance)
                            / np.maximum(1.0, self.cum_throughput)))

    def advance(self, report_cb: Optional[Callable[[float], None]] = None,
                log_cb: Optional[Callable[[str], None]] = None) -> None:
        """March from the current time to the end of the schedule.

        Calls report_cb(t) after each forced report time (and the end
        of the run) with the simulator holding the accepted state, and
        log_cb(line) once per accepted or rejected step.
        """
        sched = self.deck.schedule
        ctrl = TimestepController(dt=sched.dt_init, dt_min=sched.dt_min,
                                  dt_max=sched.dt_max)
        forced = self.forced_times()
        reports = self.report_times()
        if report_cb and self.time == 0.0 and any(
                abs(t) <= _TIME_EPS for t in reports):
            report_cb(0.0)
        while self.time < sched.t_end - _TIME_EPS:
            dt = ctrl.propose(self.time, forced)
            t_new = self.time + dt
            for ft in forced:
                if abs(t_new - ft) <= _TIME_EPS:
                    t_new = ft
                    break
            dt = t_new - self.time
            try:
                state, ok, iters, lin, solves, capped = self.newton_step(
                    self.state, dt, t_new, self.capped)
                reason = "" if ok else "newton iteration limit"
            except (DivergedResidual, SingularCellBlock, Breakdown,
                    MaxIterations, PoreSpaceExhausted,
                    DegenerateTemperature) as exc:
                if not self.steps and isinstance(exc, PoreSpaceExhausted):
                    raise
                ok = False
                iters = lin = solves = 0
                reason = f"{type(exc).__name__}: {exc}"
            if not ok:
                if log_cb:
                    log_cb(f"t={self.time:<12.6g} dt={dt:<10.4g} "
                           f"rejected ({reason})")
                ctrl.on_failure(dt, self.time, reason or "no convergence")
                continue
            self.state = state
            self.capped = capped
            self.time = t_new
            balance = self.audit_step(dt)
            self.accn = self.ws.acc.copy()
            for w, blk in enumerate(self.blocks):
                self.cum_rates[w] += dt * blk.phase_rates.sum(axis=0)
            self.steps.append(StepRecord(time=t_new, dt=dt, newton=iters,
                                         linear=lin, solves=solves,
                                         balance=balance))
            if log_cb:
                log_cb(f"t={t_new:<12.6g} dt={dt:<10.4g} newton={iters:<3d} "
                       f"linear={lin}")
            ctrl.on_success(iters)
            if report_cb and any(abs(t_new - rt) <= _TIME_EPS
                                 for rt in reports):
                report_cb(t_new)

    def totals(self) -> Tuple[int, int, int]:
        """(#accepted steps, #newton iterations, #linear iterations)."""
        return (len(self.steps),
                sum(s.newton for s in self.steps),
                sum(s.linear for s in self.steps))
