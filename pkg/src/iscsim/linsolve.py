"""Block-sparse linear solver for the Newton systems.

Pipeline per solve, on the cell-block system produced by assembly:

1. Schur elimination of every well bhp unknown onto its perforated cells
   (rank-one diagonal updates; multi-perforation wells add explicit extra
   coupling blocks between perforated cells).
2. Block decoupling: each diagonal block is reduced to the identity by
   Gauss-Jordan row operations with partial pivoting, applied to the
   right-hand side and to every off-diagonal block in the same block row.
   A pivot below 1e-13 of the block's magnitude raises SingularCellBlock.
3. Preconditioned BiCGSTAB with a fixed-order (thread-count independent)
   iteration: preconditioners are none, block-Jacobi, or restricted
   additive Schwarz with one cell of overlap, each subdomain factored by
   block ILU(0). The subdomain count is max(1, ncell // 2048) capped at
   64, a fixed function of the grid so results do not depend on the
   thread count.
4. Back-substitution of the eliminated bhp unknowns.

Convergence is ||r||/||b|| <= tol in the Euclidean norm. A breakdown of
the recurrence restarts the iteration once from the current iterate
before raising Breakdown; running out of iterations raises MaxIterations.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numba import njit, prange

from .errors import Breakdown, MaxIterations, SingularCellBlock
from .grid import Grid, partition

SUBDOMAIN_CELLS = 2048
MAX_SUBDOMAINS = 64
PIVOT_RTOL = 1e-13
BREAKDOWN_EPS = 1e-30


def subdomain_count(ncell: int) -> int:
    """Fixed subdomain count for a grid size (thread independent)."""
    return min(MAX_SUBDOMAINS, max(1, ncell // SUBDOMAIN_CELLS))


# ---------------------------------------------------------------------------
# small dense-block helpers
# ---------------------------------------------------------------------------

@njit(cache=True)
def _mm(a, b, out):
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(n):
                s += a[i, k] * b[k, j]
            out[i, j] = s


@njit(cache=True)
def _mv(a, v, out):
    n = a.shape[0]
    for i in range(n):
        s = 0.0
        for k in range(n):
            s += a[i, k] * v[k]
        out[i] = s


@njit(cache=True)
def _gj_inverse(a, inv):
    """Invert `a` in place by Gauss-Jordan with partial pivoting.

    Returns -1 on success (inv filled), else the 0-based column whose
    pivot fell below PIVOT_RTOL relative to the block's max magnitude.
    """
    n = a.shape[0]
    amax = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(a[i, j])
            if v > amax:
                amax = v
    if amax == 0.0:
        return 0
    tol = PIVOT_RTOL * amax
    for i in range(n):
        for j in range(n):
            inv[i, j] = 1.0 if i == j else 0.0
    for col in range(n):
        piv = col
        pv = abs(a[col, col])
        for r in range(col + 1, n):
            v = abs(a[r, col])
            if v > pv:
                pv = v
                piv = r
        if pv <= tol:
            return col
        if piv != col:
            for j in range(n):
                tmp = a[col, j]
                a[col, j] = a[piv, j]
                a[piv, j] = tmp
                tmp = inv[col, j]
                inv[col, j] = inv[piv, j]
                inv[piv, j] = tmp
        d = 1.0 / a[col, col]
        for j in range(n):
            a[col, j] *= d
            inv[col, j] *= d
        for r in range(n):
            if r != col:
                f = a[r, col]
                if f != 0.0:
                    for j in range(n):
                        a[r, j] -= f * a[col, j]
                        inv[r, j] -= f * inv[col, j]
    return -1


# ---------------------------------------------------------------------------
# decoupling
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def _decouple_pass(diag, rhs, offd, ptr, ids, sides, invs, flags):
    ncell = diag.shape[0]
    nu = diag.shape[1]
    for c in prange(ncell):
        work = diag[c].copy()
        bad = _gj_inverse(work, invs[c])
        if bad >= 0:
            flags[c] = bad + 1
            continue
        tmp = np.empty(nu)
        _mv(invs[c], rhs[c], tmp)
        for r in range(nu):
            rhs[c, r] = tmp[r]
        newd = np.empty((nu, nu))
        _mm(invs[c], diag[c], newd)
        for r in range(nu):
            for u in range(nu):
                diag[c, r, u] = newd[r, u]
        for nn in range(ptr[c], ptr[c + 1]):
            ic = ids[nn]
            sd = sides[nn]
            blk = offd[ic, 0] if sd == 0 else offd[ic, 1]
            _mm(invs[c], blk, newd)
            for r in range(nu):
                for u in range(nu):
                    blk[r, u] = newd[r, u]


# ---------------------------------------------------------------------------
# matvec and fixed-order dots
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def _matvec_main(diag, offd, ptr, ids, sides, other, v, out):
    ncell = diag.shape[0]
    nu = diag.shape[1]
    for c in prange(ncell):
        for r in range(nu):
            s = 0.0
            for u in range(nu):
                s += diag[c, r, u] * v[c, u]
            out[c, r] = s
        for nn in range(ptr[c], ptr[c + 1]):
            ic = ids[nn]
            o = other[nn]
            blk = offd[ic, 0] if sides[nn] == 0 else offd[ic, 1]
            for r in range(nu):
                s = 0.0
                for u in range(nu):
                    s += blk[r, u] * v[o, u]
                out[c, r] += s


@njit(cache=True)
def _matvec_extra(rows, cols, blocks, v, out):
    for e in range(rows.shape[0]):
        c = rows[e]
        o = cols[e]
        nu = out.shape[1]
        for r in range(nu):
            s = 0.0
            for u in range(nu):
                s += blocks[e, r, u] * v[o, u]
            out[c, r] += s


@njit(cache=True)
def _dot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            s += a[i, j] * b[i, j]
    return s


# ---------------------------------------------------------------------------
# block ILU(0) subdomain preconditioner
# ---------------------------------------------------------------------------

@njit(cache=True)
def _ilu_factor(diag, offd, cells, low_ptr, low_j, low_ic, low_sd,
                uinv, lblk):
    """Factor one subdomain: U_cc = A_cc − Σ (A_cj·U_jj⁻¹)·A_jc.

    Returns -1 on success, else the local cell whose pivot failed.
    """
    next_ = cells.shape[0]
    nu = diag.shape[1]
    work = np.empty((nu, nu))
    for lc in range(next_):
        ucc = diag[cells[lc]].copy()
        for nn in range(low_ptr[lc], low_ptr[lc + 1]):
            lj = low_j[nn]
            ic = low_ic[nn]
            sd = low_sd[nn]
            a_cj = offd[ic, 0] if sd == 0 else offd[ic, 1]
            a_jc = offd[ic, 1] if sd == 0 else offd[ic, 0]
            _mm(a_cj, uinv[lj], lblk[nn])
            _mm(lblk[nn], a_jc, work)
            for r in range(nu):
                for u in range(nu):
                    ucc[r, u] -= work[r, u]
        bad = _gj_inverse(ucc, uinv[lc])
        if bad >= 0:
            return lc
    return -1


@njit(cache=True)
def _ilu_apply(r, cells, low_ptr, low_j, lblk, up_ptr, up_j, up_ic, up_sd,
               offd, uinv, zloc):
    """Forward/backward block triangular solves on one subdomain."""
    next_ = cells.shape[0]
    nu = r.shape[1]
    tmp = np.empty(nu)
    for lc in range(next_):
        g = cells[lc]
        for u in range(nu):
            zloc[lc, u] = r[g, u]
        for nn in range(low_ptr[lc], low_ptr[lc + 1]):
            _mv(lblk[nn], zloc[low_j[nn]], tmp)
            for u in range(nu):
                zloc[lc, u] -= tmp[u]
    for lc in range(next_ - 1, -1, -1):
        for nn in range(up_ptr[lc], up_ptr[lc + 1]):
            ic = up_ic[nn]
            blk = offd[ic, 0] if up_sd[nn] == 0 else offd[ic, 1]
            _mv(blk, zloc[up_j[nn]], tmp)
            for u in range(nu):
                zloc[lc, u] -= tmp[u]
        _mv(uinv[lc], zloc[lc].copy(), tmp)
        for u in range(nu):
            zloc[lc, u] = tmp[u]


class _Subdomain:
    """Static structure of one ILU(0) subdomain (cells and couplings)."""

    def __init__(self, grid: Grid, owned: np.ndarray, ext: np.ndarray):
        self.cells = ext
        # positions of the owned cells inside the extended set
        self.owned = owned
        self.owned_pos = np.searchsorted(ext, owned)
        in_ext = np.zeros(grid.ncell, dtype=bool)
        in_ext[ext] = True
        mask = in_ext[grid.conn_a] & in_ext[grid.conn_b]
        ics = np.nonzero(mask)[0].astype(np.int64)
        la = np.searchsorted(ext, grid.conn_a[ics])
        lb = np.searchsorted(ext, grid.conn_b[ics])
        n = ext.shape[0]

        # lower couplings: block A_cj with j < c; side 0 means c == conn_a
        lo_c = np.where(la > lb, la, lb)
        lo_j = np.where(la > lb, lb, la)
        lo_sd = np.where(la > lb, 0, 1).astype(np.int8)
        order = np.lexsort((lo_j, lo_c))
        self.low_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(lo_c, minlength=n), out=self.low_ptr[1:])
        self.low_j = lo_j[order]
        self.low_ic = ics[order]
        self.low_sd = lo_sd[order]

        # upper couplings: block A_cj with j > c
        up_c = lo_j
        up_j = lo_c
        up_sd = (1 - lo_sd).astype(np.int8)
        order = np.lexsort((up_j, up_c))
        self.up_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(up_c, minlength=n), out=self.up_ptr[1:])
        self.up_j = up_j[order]
        self.up_ic = ics[order]
        self.up_sd = up_sd[order]


# ---------------------------------------------------------------------------
# eliminated well data
# ---------------------------------------------------------------------------

@dataclass
class _WellElim:
    cells: np.ndarray
    wrow: np.ndarray
    dwdb: float
    resid: float


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

class BlockSolver:
    """Reusable solver bound to one grid and workspace."""

    def __init__(self, grid: Grid, ws, tol: float = 1e-5,
                 maxiter: int = 200, precond: str = "ras"):
        if precond not in ("none", "bjacobi", "ras"):
            raise ValueError(f"unknown preconditioner {precond!r}")
        self.grid = grid
        self.ws = ws
        self.tol = tol
        self.maxiter = maxiter
        self.precond = precond
        self.nu = ws.resid.shape[1]
        n = grid.ncell
        self.invs = np.zeros((n, self.nu, self.nu))
        self.flags = np.zeros(n, dtype=np.int64)
        self.other = np.where(
            ws.adj_sides == 0, grid.conn_b[ws.adj_ids],
            grid.conn_a[ws.adj_ids],
        ).astype(np.int64)
        self.subs: List[_Subdomain] = []
        if precond != "none":
            part = partition(grid, subdomain_count(n))
            for s in range(part.nsub):
                owned = np.asarray(part.cells[s], dtype=np.int64)
                if precond == "ras" and part.halos[s].size:
                    ext = np.union1d(owned, part.halos[s]).astype(np.int64)
                else:
                    ext = owned
                self.subs.append(_Subdomain(grid, owned, ext))
            self._uinv = [
                np.zeros((sub.cells.shape[0], self.nu, self.nu))
                for sub in self.subs
            ]
            self._lblk = [
                np.zeros((sub.low_j.shape[0], self.nu, self.nu))
                for sub in self.subs
            ]
            self._zloc = [
                np.zeros((sub.cells.shape[0], self.nu))
                for sub in self.subs
            ]

    # -- well elimination --------------------------------------------------

    def _eliminate_wells(self, blocks, rhs):
        """Fold well unknowns into the cell system; keep back-sub data.

        Returns (elims, extra_rows, extra_cols, extra_blocks).
        """
        elims = []
        extra_rows: List[int] = []
        extra_cols: List[int] = []
        extra_blocks: List[np.ndarray] = []
        for b in blocks:
            if b.dwdb == 0.0 or not np.isfinite(b.dwdb):
                raise SingularCellBlock(
                    "well equation has a zero bhp derivative"
                )
            inv_d = 1.0 / b.dwdb
            nperf = b.cells.shape[0]
            for p in range(nperf):
                c = b.cells[p]
                rhs[c] += b.bcol[p] * (b.resid * inv_d)
                for q in range(nperf):
                    upd = np.outer(b.bcol[p], b.wrow[q]) * inv_d
                    cq = b.cells[q]
                    if cq == c:
                        self.ws.diag[c] -= upd
                    else:
                        extra_rows.append(int(c))
                        extra_cols.append(int(cq))
                        extra_blocks.append(-upd)
            elims.append(_WellElim(
                cells=b.cells, wrow=b.wrow.copy(), dwdb=b.dwdb,
                resid=b.resid,
            ))
        return elims, extra_rows, extra_cols, extra_blocks

    # -- preconditioner ----------------------------------------------------

    def _factor(self):
        for s, sub in enumerate(self.subs):
            bad = _ilu_factor(
                self.ws.diag, self.ws.offd, sub.cells,
                sub.low_ptr, sub.low_j, sub.low_ic, sub.low_sd,
                self._uinv[s], self._lblk[s],
            )
            if bad >= 0:
                raise SingularCellBlock(
                    f"ILU(0) pivot failed in cell {int(sub.cells[bad])}"
                )

    def _apply_precond(self, r, z):
        if self.precond == "none":
            z[:] = r
            return
        z[:] = 0.0
        for s, sub in enumerate(self.subs):
            _ilu_apply(
                r, sub.cells, sub.low_ptr, sub.low_j, self._lblk[s],
                sub.up_ptr, sub.up_j, sub.up_ic, sub.up_sd,
                self.ws.offd, self._uinv[s], self._zloc[s],
            )
            z[sub.owned] = self._zloc[s][sub.owned_pos]

    # -- matvec --------------------------------------------------------------

    def _matvec(self, v, out):
        _matvec_main(
            self.ws.diag, self.ws.offd, self.ws.adj_ptr, self.ws.adj_ids,
            self.ws.adj_sides, self.other, v, out,
        )
        if self._extra_rows.shape[0]:
            _matvec_extra(
                self._extra_rows, self._extra_cols, self._extra_blocks,
                v, out,
            )

    # -- driver ----------------------------------------------------------------

    def solve(self, blocks) -> Tuple[np.ndarray, np.ndarray, int]:
        """Solve J δu = −F in place on the assembled workspace.

        Returns (du (ncell, nu), dbhp (nwell,), linear iterations). The
        workspace diag/offd blocks are overwritten.
        """
        ws = self.ws
        rhs = -ws.resid
        elims, xr, xc, xb = self._eliminate_wells(blocks, rhs)
        self._extra_rows = np.asarray(xr, dtype=np.int64)
        self._extra_cols = np.asarray(xc, dtype=np.int64)
        self._extra_blocks = (
            np.stack(xb) if xb else np.zeros((0, self.nu, self.nu))
        )

        self.flags[:] = 0
        _decouple_pass(
            ws.diag, rhs, ws.offd, ws.adj_ptr, ws.adj_ids, ws.adj_sides,
            self.invs, self.flags,
        )
        if self.flags.any():
            cell = int(np.argmax(self.flags > 0))
            col = int(self.flags[cell] - 1)
            raise SingularCellBlock(
                f"diagonal block of cell {cell} is singular at column {col}"
            )
        for e in range(self._extra_blocks.shape[0]):
            self._extra_blocks[e] = self.invs[self._extra_rows[e]] \
                @ self._extra_blocks[e]

        if self.precond != "none":
            self._factor()

        du, iters = self._bicgstab(rhs)

        dbhp = np.zeros(len(elims))
        for w, el in enumerate(elims):
            s = el.resid
            for p in range(el.cells.shape[0]):
                s += float(el.wrow[p] @ du[el.cells[p]])
            dbhp[w] = -s / el.dwdb
        return du, dbhp, iters

    def _bicgstab(self, b) -> Tuple[np.ndarray, int]:
        n, nu = b.shape
        x = np.zeros_like(b)
        nb = np.sqrt(_dot(b, b))
        if nb == 0.0:
            return x, 0
        r = b.copy()
        rhat = b.copy()
        p = np.zeros_like(b)
        v = np.zeros_like(b)
        phat = np.zeros_like(b)
        shat = np.zeros_like(b)
        t = np.zeros_like(b)
        rho_old = 1.0
        alpha = 1.0
        omega = 1.0
        restarted = False
        it = 0
        first = True
        while it < self.maxiter:
            it += 1
            rho = _dot(rhat, r)
            if abs(rho) < BREAKDOWN_EPS * nb * nb or (
                    not first and omega == 0.0):
                if restarted:
                    raise Breakdown(
                        f"BiCGSTAB scalar breakdown at iteration {it}"
                    )
                # restart from the current iterate
                self._matvec(x, t)
                r = b - t
                rhat = r.copy()
                p[:] = 0.0
                v[:] = 0.0
                rho_old = 1.0
                alpha = 1.0
                omega = 1.0
                first = True
                restarted = True
                rho = _dot(rhat, r)
                if abs(rho) < BREAKDOWN_EPS * nb * nb:
                    raise Breakdown("BiCGSTAB restart found a null residual")
            if first:
                p[:] = r
                first = False
            else:
                beta = (rho / rho_old) * (alpha / omega)
                p = r + beta * (p - omega * v)
            self._apply_precond(p, phat)
            self._matvec(phat, v)
            den = _dot(rhat, v)
            if abs(den) < BREAKDOWN_EPS * nb * nb:
                if restarted:
                    raise Breakdown(
                        f"BiCGSTAB denominator breakdown at iteration {it}"
                    )
                self._matvec(x, t)
                r = b - t
                rhat = r.copy()
                p[:] = 0.0
                v[:] = 0.0
                rho_old = 1.0
                alpha = 1.0
                omega = 1.0
                first = True
                restarted = True
                continue
            alpha = rho / den
            s = r - alpha * v
            if np.sqrt(_dot(s, s)) / nb <= self.tol:
                x += alpha * phat
                return x, it
            self._apply_precond(s, shat)
            self._matvec(shat, t)
            tt = _dot(t, t)
            if tt == 0.0:
                if restarted:
                    raise Breakdown("BiCGSTAB stagnated (t = 0)")
                self._matvec(x, t)
                r = b - t
                rhat = r.copy()
                p[:] = 0.0
                v[:] = 0.0
                rho_old = 1.0
                alpha = 1.0
                omega = 1.0
                first = True
                restarted = True
                continue
            omega = _dot(t, s) / tt
            x += alpha * phat + omega * shat
            r = s - omega * t
            if np.sqrt(_dot(r, r)) / nb <= self.tol:
                return x, it
            rho_old = rho
        raise MaxIterations(
            f"BiCGSTAB did not converge in {self.maxiter} iterations"
        )


# ---------------------------------------------------------------------------
# dense reference (testing aid)
# ---------------------------------------------------------------------------

def to_dense(diag, offd, conn_a, conn_b,
             extra: Optional[Sequence] = None) -> np.ndarray:
    """Expand the block-sparse cell system into a dense matrix."""
    n, nu, _ = diag.shape
    full = np.zeros((n * nu, n * nu))
    for c in range(n):
        full[c * nu:(c + 1) * nu, c * nu:(c + 1) * nu] = diag[c]
    for ic in range(conn_a.shape[0]):
        a, b = int(conn_a[ic]), int(conn_b[ic])
        full[a * nu:(a + 1) * nu, b * nu:(b + 1) * nu] += offd[ic, 0]
        full[b * nu:(b + 1) * nu, a * nu:(a + 1) * nu] += offd[ic, 1]
    if extra is not None:
        for c, o, blk in extra:
            full[c * nu:(c + 1) * nu, o * nu:(o + 1) * nu] += blk
    return full
