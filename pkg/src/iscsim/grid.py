"""Structured-grid geometry, transmissibilities, partitioning, heat loss.

Cells are ordered x-fastest: index = i + nx*(j + ny*k). Depth increases
downward (+z); layer k=0 is the top of the model. Connections hold the
harmonic-averaged geometric factor (A*k/h, md*ft) used by Darcy fluxes and
the thermal factor (A/h, ft) used by conduction; each interior face appears
exactly once with cell_a < cell_b.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .deck import GridSpec, HeatLossSpec, RockSpec

AXIS_X, AXIS_Y, AXIS_Z = 0, 1, 2


@dataclass(frozen=True, eq=False)
class Grid:
    nx: int
    ny: int
    nz: int
    dx: np.ndarray          # (nx,) ft
    dy: np.ndarray          # (ny,) ft
    dz: np.ndarray          # (nz,) ft
    depth: np.ndarray       # (ncell,) cell-center depth, ft
    volume: np.ndarray      # (ncell,) bulk volume, ft³
    kx: np.ndarray          # (ncell,) md
    ky: np.ndarray
    kz: np.ndarray
    phi_ref: np.ndarray     # (ncell,) reference porosity
    area_z: np.ndarray      # (ncell,) horizontal face area dx*dy, ft²
    conn_a: np.ndarray      # (nconn,) int32, conn_a < conn_b
    conn_b: np.ndarray
    conn_geom: np.ndarray   # (nconn,) harmonic (A*k/h), md*ft
    conn_therm: np.ndarray  # (nconn,) harmonic (A/h), ft
    conn_axis: np.ndarray   # (nconn,) int8

    @property
    def ncell(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def nconn(self) -> int:
        return self.conn_a.shape[0]

    def cell_index(self, i: int, j: int, k: int) -> int:
        """0-based (i, j, k) to flat cell index."""
        return i + self.nx * (j + self.ny * k)

    def cell_ijk(self, cell: int) -> Tuple[int, int, int]:
        i = cell % self.nx
        j = (cell // self.nx) % self.ny
        k = cell // (self.nx * self.ny)
        return i, j, k


def harmonic(a: float, b: float) -> float:
    """Harmonic pair average 2ab/(a+b); zero when either side is zero."""
    if a <= 0.0 or b <= 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


def build_grid(spec: GridSpec, rock: RockSpec) -> Grid:
    """Assemble geometry and the connection list from deck sections."""
    nx, ny, nz = spec.nx, spec.ny, spec.nz
    dx = np.asarray(spec.dx, dtype=np.float64)
    dy = np.asarray(spec.dy, dtype=np.float64)
    dz = np.asarray(spec.dz, dtype=np.float64)
    ncell = nx * ny * nz

    kx = np.asarray(rock.permx, dtype=np.float64)
    ky = np.asarray(rock.permy, dtype=np.float64)
    kz = np.asarray(rock.permz, dtype=np.float64)
    phi_ref = np.full(ncell, rock.phi_ref, dtype=np.float64)

    z_top = spec.depth_top + np.concatenate(([0.0], np.cumsum(dz)[:-1]))
    z_center = z_top + 0.5 * dz

    depth = np.empty(ncell)
    volume = np.empty(ncell)
    area_z = np.empty(ncell)
    for k in range(nz):
        for j in range(ny):
            base = nx * (j + ny * k)
            for i in range(nx):
                c = base + i
                depth[c] = z_center[k]
                volume[c] = dx[i] * dy[j] * dz[k]
                area_z[c] = dx[i] * dy[j]

    conn_a: List[int] = []
    conn_b: List[int] = []
    conn_geom: List[float] = []
    conn_therm: List[float] = []
    conn_axis: List[int] = []

    def add(a: int, b: int, area: float, ha: float, hb: float,
            ka: float, kb: float, axis: int) -> None:
        conn_a.append(a)
        conn_b.append(b)
        conn_geom.append(harmonic(area * ka / ha, area * kb / hb))
        conn_therm.append(harmonic(area / ha, area / hb))
        conn_axis.append(axis)

    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                c = i + nx * (j + ny * k)
                if i + 1 < nx:
                    n = c + 1
                    add(c, n, dy[j] * dz[k], dx[i], dx[i + 1],
                        kx[c], kx[n], AXIS_X)
                if j + 1 < ny:
                    n = c + nx
                    add(c, n, dx[i] * dz[k], dy[j], dy[j + 1],
                        ky[c], ky[n], AXIS_Y)
                if k + 1 < nz:
                    n = c + nx * ny
                    add(c, n, dx[i] * dy[j], dz[k], dz[k + 1],
                        kz[c], kz[n], AXIS_Z)

    return Grid(
        nx=nx, ny=ny, nz=nz, dx=dx, dy=dy, dz=dz,
        depth=depth, volume=volume,
        kx=kx, ky=ky, kz=kz, phi_ref=phi_ref, area_z=area_z,
        conn_a=np.asarray(conn_a, dtype=np.int32),
        conn_b=np.asarray(conn_b, dtype=np.int32),
        conn_geom=np.asarray(conn_geom, dtype=np.float64),
        conn_therm=np.asarray(conn_therm, dtype=np.float64),
        conn_axis=np.asarray(conn_axis, dtype=np.int8),
    )


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint slab decomposition with per-subdomain halo cells."""

    nsub: int
    owner: np.ndarray               # (ncell,) int32 subdomain of each cell
    cells: Tuple[np.ndarray, ...]   # owned cells per subdomain, ascending
    halos: Tuple[np.ndarray, ...]   # neighbor cells owned elsewhere


def partition(grid: Grid, p: int) -> Partition:
    """Slab-partition the grid along its longest axis into p subdomains.

    Slab counts along the axis differ by at most one; leading slabs take
    the remainder. Deterministic for fixed inputs.
    """
    if p < 1:
        raise ValueError("thread count must be >= 1")
    dims = (grid.nx, grid.ny, grid.nz)
    axis = int(np.argmax(dims))
    n_axis = dims[axis]
    base, extra = divmod(n_axis, p)
    sizes = [base + (1 if s < extra else 0) for s in range(p)]
    slab_of = np.empty(n_axis, dtype=np.int32)
    pos = 0
    for s, size in enumerate(sizes):
        slab_of[pos:pos + size] = s
        pos += size

    ncell = grid.ncell
    owner = np.empty(ncell, dtype=np.int32)
    for c in range(ncell):
        ijk = (c % grid.nx, (c // grid.nx) % grid.ny,
               c // (grid.nx * grid.ny))
        owner[c] = slab_of[ijk[axis]]

    cells = tuple(
        np.flatnonzero(owner == s).astype(np.int32) for s in range(p)
    )
    halo_sets: List[set] = [set() for _ in range(p)]
    for a, b in zip(grid.conn_a, grid.conn_b):
        sa, sb = owner[a], owner[b]
        if sa != sb:
            halo_sets[sa].add(int(b))
            halo_sets[sb].add(int(a))
    halos = tuple(
        np.asarray(sorted(halo_sets[s]), dtype=np.int32) for s in range(p)
    )
    return Partition(nsub=p, owner=owner, cells=cells, halos=halos)


def heat_loss_coefficients(
    grid: Grid, config: Optional[HeatLossSpec]
) -> Tuple[np.ndarray, float, float, float]:
    """Per-cell boundary face area and the loss constants.

    Returns (face_area, k_ob, distance, rho_offset) where face_area is zero
    for interior cells and counts both faces when nz == 1. The cell's loss
    rate in Btu/day is face_area*k_ob*((T - t_initial)/distance - rho).
    """
    area = np.zeros(grid.ncell)
    if config is None:
        return area, 0.0, 1.0, 0.0
    nxny = grid.nx * grid.ny
    for c in range(grid.ncell):
        k = c // nxny
        faces = (1 if k == 0 else 0) + (1 if k == grid.nz - 1 else 0)
        area[c] = faces * grid.area_z[c]
    return area, config.k_ob, config.distance, config.rho


def heat_loss_rate(
    grid: Grid, cell: int, t: float, config: Optional[HeatLossSpec]
) -> float:
    """Volumetric heat-loss rate Q_loss (Btu/(ft³·day)) for one cell.

    Zero for interior cells and when losses are disabled. Positive values
    remove energy from the cell.
    """
    if config is None:
        return 0.0
    nxny = grid.nx * grid.ny
    k = cell // nxny
    faces = (1 if k == 0 else 0) + (1 if k == grid.nz - 1 else 0)
    if faces == 0:
        return 0.0
    a = faces * grid.area_z[cell]
    q = a * config.k_ob * ((t - config.t_initial) / config.distance - config.rho)
    return q / grid.volume[cell]
