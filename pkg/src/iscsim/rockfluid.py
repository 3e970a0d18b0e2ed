"""Relative permeability, capillary pressure, and rock property models.

Two saturation tables drive three-phase flow: a water-oil table indexed by
water saturation (k_rw, k_row, p_cow) and a liquid-gas table indexed by gas
saturation (k_rg, k_rog, p_cog). Lookups are piecewise linear with end
clamping; the three-phase oil curve comes from Stone's second model clamped
to [0, 1]. Temperature dependence of relative permeability is not modeled.

RockModel gathers the scalar rock/thermal constants consumed by the energy
balance and the porosity correlation.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _props
from .errors import NonPhysicalValue
from .units import DEFAULT_P_REF, DEFAULT_T_REF

SWT_COLUMNS = ("krw", "krow", "pcow")
SLT_COLUMNS = ("krg", "krog", "pcog")


@dataclass(frozen=True)
class SatTable:
    """One saturation-indexed table: kr pair plus a capillary column.

    kind 'swt' holds (krw, krow, pcow) against S_w; kind 'slt' holds
    (krg, krog, pcog) against S_g. `kr` is the phase named by the index
    (water or gas), `kro` the opposing oil curve.
    """

    kind: str
    s: np.ndarray
    kr: np.ndarray
    kro: np.ndarray
    pc: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", np.ascontiguousarray(self.s, dtype=np.float64))
        object.__setattr__(self, "kr", np.ascontiguousarray(self.kr, dtype=np.float64))
        object.__setattr__(self, "kro", np.ascontiguousarray(self.kro, dtype=np.float64))
        object.__setattr__(self, "pc", np.ascontiguousarray(self.pc, dtype=np.float64))

    def validate(self) -> None:
        if self.kind not in ("swt", "slt"):
            raise NonPhysicalValue(f"table kind must be swt|slt, got {self.kind!r}")
        n = self.s.shape[0]
        if n < 2:
            raise NonPhysicalValue("saturation table needs at least two rows")
        for col, name in ((self.kr, "kr"), (self.kro, "kro"), (self.pc, "pc")):
            if col.shape != (n,):
                raise NonPhysicalValue(
                    f"table column {name} length {col.shape[0]} != abscissa {n}"
                )
        if np.any(np.diff(self.s) <= 0.0):
            raise NonPhysicalValue("saturation abscissa must be strictly increasing")
        if self.s[0] < 0.0 or self.s[-1] > 1.0:
            raise NonPhysicalValue("saturation abscissa must lie in [0, 1]")
        for col, name in ((self.kr, "kr"), (self.kro, "kro")):
            if np.any(col < 0.0) or np.any(col > 1.0):
                raise NonPhysicalValue(f"column {name} must lie in [0, 1]")
        if np.any(np.diff(self.kr) < 0.0):
            phase = "krw" if self.kind == "swt" else "krg"
            raise NonPhysicalValue(f"{phase} must be nondecreasing in its saturation")
        if self.kind == "swt" and np.any(np.diff(self.kro) > 0.0):
            raise NonPhysicalValue("krow must be nonincreasing in S_w")

    def column(self, name: str) -> np.ndarray:
        names = SWT_COLUMNS if self.kind == "swt" else SLT_COLUMNS
        if name not in names:
            raise KeyError(f"{self.kind} table has columns {names}, not {name!r}")
        return (self.kr, self.kro, self.pc)[names.index(name)]


class InterpResult(NamedTuple):
    value: float
    dvalue_dS: float


class Stone2Result(NamedTuple):
    kro: float
    d_krow: float
    d_krw: float
    d_krog: float
    d_krg: float


class CapillaryResult(NamedTuple):
    p_cow: float
    p_cog: float
    dp_cow_dSw: float
    dp_cog_dSg: float


class Kro3Result(NamedTuple):
    kro: float
    dkro_dSw: float
    dkro_dSg: float


def interp(table: SatTable, s: float, column: str) -> InterpResult:
    """Piecewise-linear table lookup, end-clamped, with the segment slope."""
    ys = table.column(column)
    v, dv = _props.interp1(table.s, ys, s)
    return InterpResult(v, dv)


def stone2(
    k_rocw: float, k_row: float, k_rw: float, k_rog: float, k_rg: float
) -> Stone2Result:
    """Stone's second model, clamped to [0, 1], with input partials.

    k_ro = k_rocw[(k_row/k_rocw + k_rw)(k_rog/k_rocw + k_rg) − k_rw − k_rg];
    partials are zero on the clamp branches.
    """
    if not k_rocw > 0.0:
        raise NonPhysicalValue(f"k_rocw must be positive, got {k_rocw}")
    return Stone2Result(*_props.stone2(k_rocw, k_row, k_rw, k_rog, k_rg))


@dataclass(frozen=True)
class RelPermModel:
    """Paired SWT/SLT tables plus the connate-water oil endpoint."""

    swt: SatTable
    slt: SatTable
    krocw: float

    @classmethod
    def from_tables(cls, swt: SatTable, slt: SatTable) -> "RelPermModel":
        """Build with k_rocw = k_row at the first SWT node, checking that
        the SLT table's oil curve reproduces it at S_g = 0."""
        swt.validate()
        slt.validate()
        if swt.kind != "swt" or slt.kind != "slt":
            raise NonPhysicalValue("from_tables expects (swt, slt) in that order")
        krocw = float(swt.kro[0])
        if not krocw > 0.0:
            raise NonPhysicalValue(
                f"k_row at connate water must be positive, got {krocw}"
            )
        krog0 = _props.interp1(slt.s, slt.kro, 0.0)[0]
        if abs(krog0 - krocw) > 1e-9:
            raise NonPhysicalValue(
                f"k_rog(S_g=0) = {krog0} must equal k_row(S_wc) = {krocw}"
            )
        return cls(swt=swt, slt=slt, krocw=krocw)

    def kro3(self, s_w: float, s_g: float) -> Kro3Result:
        """Three-phase oil relative permeability with saturation partials."""
        krw, dkrw = _props.interp1(self.swt.s, self.swt.kr, s_w)
        krow, dkrow = _props.interp1(self.swt.s, self.swt.kro, s_w)
        krg, dkrg = _props.interp1(self.slt.s, self.slt.kr, s_g)
        krog, dkrog = _props.interp1(self.slt.s, self.slt.kro, s_g)
        kro, d_row, d_rw, d_rog, d_rg = _props.stone2(
            self.krocw, krow, krw, krog, krg
        )
        return Kro3Result(
            kro,
            d_row * dkrow + d_rw * dkrw,
            d_rog * dkrog + d_rg * dkrg,
        )

    def capillary_pressures(self, s_w: float, s_g: float) -> CapillaryResult:
        """(p_cow(S_w), p_cog(S_g)) so p_w = p_o − p_cow, p_g = p_o + p_cog."""
        pcow, dpcow = _props.interp1(self.swt.s, self.swt.pc, s_w)
        pcog, dpcog = _props.interp1(self.slt.s, self.slt.pc, s_g)
        return CapillaryResult(pcow, pcog, dpcow, dpcog)


def capillary_pressures(model: RelPermModel, s_w: float, s_g: float) -> CapillaryResult:
    return model.capillary_pressures(s_w, s_g)


@dataclass(frozen=True)
class RockModel:
    """Scalar rock and thermal constants.

    Heat capacity U_r = cp1(T−T_ref) + cp2/2(T²−T_ref²) in Btu/ft³;
    thermal conductivities in Btu/(ft·day·°F); the coke conductivity is
    per unit coke concentration. Porosity compressibilities feed
    φ = φ_ref(1+ctot) or φ_ref·e^ctot per `porosity_mode`.
    """

    phi_ref: float
    cpor: float = 0.0
    ctpor: float = 0.0
    cptpor: float = 0.0
    porosity_mode: str = "linear"
    cp1: float = 0.0
    cp2: float = 0.0
    coke_cp: float = 0.0
    rho_coke: Optional[float] = None
    kt_w: float = 0.0
    kt_o: float = 0.0
    kt_g: float = 0.0
    kt_rock: float = 0.0
    kt_coke: float = 0.0
    p_ref: float = DEFAULT_P_REF
    t_ref: float = DEFAULT_T_REF

    def validate(self) -> None:
        if not 0.0 < self.phi_ref < 1.0:
            raise NonPhysicalValue(f"phi_ref must lie in (0,1), got {self.phi_ref}")
        if self.porosity_mode not in ("linear", "nonlinear"):
            raise NonPhysicalValue(
                f"porosity mode must be linear|nonlinear, got {self.porosity_mode!r}"
            )
        for name in ("kt_w", "kt_o", "kt_g", "kt_rock", "kt_coke"):
            if getattr(self, name) < 0.0:
                raise NonPhysicalValue(f"{name} must be non-negative")
        if self.rho_coke is not None and not self.rho_coke > 0.0:
            raise NonPhysicalValue(f"rho_coke must be positive, got {self.rho_coke}")
