"""CSV emission of cell profiles and well time series.

A run writes two UTF-8 comma-separated files under one directory:
cells.csv with one row per (time, cell) and wells.csv with one row
per (time, well), each with a single header line. Floats use the
shortest representation that round-trips, so re-parsing a file
recovers the in-memory values exactly and repeated runs of the same
deck produce byte-identical output.
"""

import os
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import SinkFailure

__all__ = ["ReportFrame", "ReportSink", "capture_frame", "write_frame"]


@dataclass(frozen=True)
class ReportFrame:
    """Snapshot of one report time.

    Cell arrays follow cell index order; x holds the oil-phase molar
    fractions and y the full gas-phase composition, including the
    water and oil vapor entries implied by the pseudo-K correction.
    Well rates are molar (lbmol/day), positive into the reservoir,
    and cum integrates them over accepted steps.
    """

    time: float
    p: np.ndarray            # (ncell,) psi
    t: np.ndarray            # (ncell,) degF
    sw: np.ndarray           # (ncell,)
    so: np.ndarray           # (ncell,)
    sg: np.ndarray           # (ncell,)
    x: np.ndarray            # (ncell, nco)
    y: np.ndarray            # (ncell, nfull)
    cc: np.ndarray           # (ncell,) lbmol/ft3
    oil_names: Tuple[str, ...]
    vap_names: Tuple[str, ...]
    well_names: Tuple[str, ...]
    bhp: np.ndarray          # (nwell,) psi
    rates: np.ndarray        # (nwell, 3) water, oil, gas
    cum: np.ndarray          # (nwell, 3)


def capture_frame(sim, time: float) -> ReportFrame:
    """Build a frame from a simulator holding an accepted state."""
    fluid = sim.deck.fluid
    state = sim.state
    rates = np.zeros((len(sim.wells), 3))
    for w, blk in enumerate(sim.blocks):
        rates[w] = blk.phase_rates.sum(axis=0)
    return ReportFrame(
        time=time,
        p=state.p.copy(),
        t=state.t.copy(),
        sw=state.sw.copy(),
        so=1.0 - state.sw - state.sg,
        sg=state.sg.copy(),
        x=state.x.copy(),
        y=sim.ws.yfull.copy(),
        cc=state.cc.copy(),
        oil_names=tuple(c.name for c in fluid.oils),
        vap_names=tuple(c.name for c in fluid.gas_capable),
        well_names=tuple(w.name for w in sim.wells),
        bhp=state.bhp.copy(),
        rates=rates,
        cum=sim.cum_rates.copy(),
    )


def _fmt(v) -> str:
    return repr(float(v))


class ReportSink:
    """Owns cells.csv and wells.csv under one output directory.

    Headers are written with the first frame, using that frame's
    component and well names. Usable as a context manager.
    """

    def __init__(self, directory: str):
        self.directory = directory
        try:
            os.makedirs(directory, exist_ok=True)
            self.cells = open(os.path.join(directory, "cells.csv"),
                              "w", encoding="utf-8", newline="")
            self.wells = open(os.path.join(directory, "wells.csv"),
                              "w", encoding="utf-8", newline="")
        except OSError as exc:
            raise SinkFailure(f"cannot open report sink: {exc}") from exc
        self._headered = False

    def close(self) -> None:
        self.cells.close()
        self.wells.close()

    def __enter__(self) -> "ReportSink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _headers(frame: ReportFrame) -> Tuple[str, str]:
    cols = ["time", "cell", "p", "T", "S_w", "S_o", "S_g"]
    cols += [f"x_{n}" for n in frame.oil_names]
    cols += [f"y_{n}" for n in frame.vap_names]
    cols.append("C_c")
    wcols = ["time", "well", "bhp", "q_water", "q_oil", "q_gas",
             "cum_water", "cum_oil", "cum_gas"]
    return ",".join(cols) + "\n", ",".join(wcols) + "\n"


def write_frame(frame: ReportFrame, sink: ReportSink) -> int:
    """Append one frame to both files; returns bytes written."""
    lines: List[str] = []
    wlines: List[str] = []
    if not sink._headered:
        head, whead = _headers(frame)
        lines.append(head)
        wlines.append(whead)
        sink._headered = True
    tstr = _fmt(frame.time)
    for c in range(frame.p.shape[0]):
        vals = [tstr, str(c), _fmt(frame.p[c]), _fmt(frame.t[c]),
                _fmt(frame.sw[c]), _fmt(frame.so[c]), _fmt(frame.sg[c])]
        vals += [_fmt(v) for v in frame.x[c]]
        vals += [_fmt(v) for v in frame.y[c]]
        vals.append(_fmt(frame.cc[c]))
        lines.append(",".join(vals) + "\n")
    for w, name in enumerate(frame.well_names):
        vals = [tstr, name, _fmt(frame.bhp[w])]
        vals += [_fmt(v) for v in frame.rates[w]]
        vals += [_fmt(v) for v in frame.cum[w]]
        wlines.append(",".join(vals) + "\n")
    try:
        ctext = "".join(lines)
        wtext = "".join(wlines)
        sink.cells.write(ctext)
        sink.wells.write(wtext)
    except OSError as exc:
        raise SinkFailure(f"cannot write report frame: {exc}") from exc
    return len(ctext.encode("utf-8")) + len(wtext.encode("utf-8"))
