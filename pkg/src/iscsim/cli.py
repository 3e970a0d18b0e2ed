"""Command-line entry point.

Two commands: `run` integrates a deck and writes cells.csv/wells.csv,
`bench` runs the same deck once per requested thread count and prints
a scaling table. Exit codes: 0 success, 2 deck/input error, 3 physics
failure, 4 linear-solver failure, 5 I/O failure. The ISCSIM_THREADS
environment variable supplies the default thread count.
"""

import argparse
import json
import os
import re
import sys
import time
from typing import List, Optional

from .assembly import check_jacobian
from .deck import parse_deck
from .errors import DeckError, PhysicsError, SimulationStalled, SolverError
from .newton import Simulator
from .report import ReportSink, capture_frame, write_frame

__all__ = ["main"]


def _default_threads(flag: Optional[int]) -> Optional[int]:
    if flag:
        return flag
    env = os.environ.get("ISCSIM_THREADS")
    return int(env) if env else None


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, DeckError):
        return 2
    if isinstance(exc, SimulationStalled) and isinstance(
            exc.cause, SolverError):
        return 4
    if isinstance(exc, PhysicsError):
        return 3
    if isinstance(exc, SolverError):
        return 4
    if isinstance(exc, OSError):
        return 5
    return 1


def _category(exc: BaseException) -> str:
    return {2: "deck error", 3: "physics error", 4: "solver error",
            5: "io error"}.get(_exit_code(exc), "error")


def scale_grid(text: str, cells: int) -> str:
    """Rescale a deck's grid to roughly the requested cell count.

    Every axis with more than one cell is scaled by the same factor so
    the total lands near `cells`, keeping the aspect ratio; well CELL
    coordinates are clamped into the new ranges.
    """
    dims = {}
    for ax in ("NX", "NY", "NZ"):
        m = re.search(rf"^{ax}\s+(\d+)\s*$", text, re.M)
        if not m:
            raise DeckError(f"cannot rescale: {ax} record not found")
        dims[ax] = int(m.group(1))
    total = dims["NX"] * dims["NY"] * dims["NZ"]
    live = [ax for ax in dims if dims[ax] > 1] or ["NX"]
    factor = (cells / total) ** (1.0 / len(live))
    new = {ax: (max(1, round(v * factor)) if ax in live else v)
           for ax, v in dims.items()}
    for ax, v in new.items():
        text = re.sub(rf"^{ax}\s+\d+\s*$", f"{ax} {v}", text, flags=re.M)

    def clamp(m: "re.Match[str]") -> str:
        i = min(int(m.group(1)), new["NX"])
        j = min(int(m.group(2)), new["NY"])
        k = min(int(m.group(3)), new["NZ"])
        return f"CELL {i} {j} {k}"

    return re.sub(r"^CELL\s+(\d+)\s+(\d+)\s+(\d+)\s*$", clamp, text,
                  flags=re.M)


def _summary(sim: Simulator, wall: float) -> dict:
    steps, newton, linear = sim.totals()
    return {
        "threads": sim.threads,
        "steps": [{"time": s.time, "dt": s.dt, "newton": s.newton,
                   "linear": s.linear, "solves": s.solves,
                   "balance": s.balance} for s in sim.steps],
        "totals": {"steps": steps, "newton": newton, "linear": linear,
                   "solves": sum(s.solves for s in sim.steps)},
        "work_seconds": sim.work_seconds,
        "wall_seconds": wall,
        "cumulative_imbalance": sim.cumulative_imbalance(),
    }


def _write_json(path: str, payload: dict) -> None:
    blob = json.dumps(payload, indent=2, sort_keys=True)
    if path == "-":
        print(blob)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(blob + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    text = open(args.deck, encoding="utf-8").read()
    deck = parse_deck(text)
    if args.validate_only:
        print(f"{args.deck}: deck valid "
              f"({deck.grid.nx}x{deck.grid.ny}x{deck.grid.nz} cells, "
              f"{len(deck.wells)} wells)")
        return 0
    sim = Simulator(deck, threads=_default_threads(args.threads),
                    jacobian=args.jacobian)
    if args.check_jacobian:
        worst = check_jacobian(
            sim.grid, sim.pack, sim.ws, sim.wells, sim.streams, sim.state,
            sim.accn, deck.schedule.dt_init, deck.schedule.dt_init,
            sim.capped)
        print(f"max relative jacobian discrepancy: {worst:.6e}")
        return 0
    log = print if args.verbose else None
    t0 = time.perf_counter()
    with ReportSink(args.out) as sink:
        def emit(t: float) -> None:
            write_frame(capture_frame(sim, t), sink)

        sim.advance(report_cb=emit, log_cb=log)
    wall = time.perf_counter() - t0
    steps, newton, linear = sim.totals()
    print(f"completed t={sim.time:g}: {steps} steps, {newton} newton, "
          f"{linear} linear, {wall:.2f} s "
          f"(reports in {os.path.abspath(args.out)})")
    if args.summary_json:
        _write_json(args.summary_json, {"deck": args.deck,
                                        **_summary(sim, wall)})
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    text = open(args.deck, encoding="utf-8").read()
    if args.cells:
        text = scale_grid(text, args.cells)
    deck = parse_deck(text)
    counts = [int(v) for v in args.threads.split(",") if v.strip()]
    if not counts:
        raise DeckError("bench needs at least one thread count")
    rows = []
    for n in counts:
        sim = Simulator(deck, threads=n)
        t0 = time.perf_counter()
        sim.advance()
        wall = time.perf_counter() - t0
        steps = len(sim.steps)
        newton = sum(s.solves for s in sim.steps)
        solver = sum(s.linear for s in sim.steps)
        avg = solver / max(1, newton)
        rows.append({"threads": n, "steps": steps, "newton": newton,
                     "solver": solver, "avg_solver": avg,
                     "time": sim.work_seconds, "wall": wall})
    base = rows[0]["time"]
    for row in rows:
        row["speedup"] = base / row["time"] if row["time"] > 0 else 1.0
    print(f"{'Threads':>7}  {'#Steps':>7}  {'#Newton':>8}  {'#Solver':>8}"
          f"  {'Avg. solver':>12}  {'Time (s)':>10}  {'Speedup':>8}")
    for row in rows:
        print(f"{row['threads']:>7d}  {row['steps']:>7d}  "
              f"{row['newton']:>8d}  {row['solver']:>8d}  "
              f"{row['avg_solver']:>12.2f}  {row['time']:>10.3f}  "
              f"{row['speedup']:>8.3f}")
    if args.summary_json:
        _write_json(args.summary_json, {"deck": args.deck, "bench": rows})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iscsim",
        description="Fully implicit in-situ combustion reservoir simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate a deck and write reports")
    run.add_argument("deck", help="input deck path")
    run.add_argument("--out", default=".",
                     help="report output directory (default: .)")
    run.add_argument("--threads", type=int, default=None,
                     help="thread count (default: ISCSIM_THREADS or deck)")
    run.add_argument("--jacobian", choices=("analytic", "numeric"),
                     default=None, help="jacobian mode (default: deck)")
    run.add_argument("--check-jacobian", action="store_true",
                     help="compare analytic vs numeric jacobian and exit")
    run.add_argument("--validate-only", action="store_true",
                     help="parse and validate the deck, then exit")
    run.add_argument("--summary-json", default=None, metavar="PATH",
                     help="write the timestep log as JSON ('-' = stdout)")
    run.add_argument("--verbose", action="store_true",
                     help="log every accepted and rejected step")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="scaling benchmark over threads")
    bench.add_argument("deck", help="benchmark deck path")
    bench.add_argument("--threads", default="1,2,4",
                       help="comma-separated thread counts (default 1,2,4)")
    bench.add_argument("--cells", type=int, default=None,
                       help="override the grid to roughly this many cells")
    bench.add_argument("--summary-json", default=None, metavar="PATH",
                       help="write the bench table as JSON ('-' = stdout)")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DeckError, PhysicsError, SolverError, OSError) as exc:
        print(f"{_category(exc)}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
