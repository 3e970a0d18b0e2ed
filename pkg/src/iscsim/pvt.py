"""Fluid and rock property evaluations.

Implements every pressure/temperature/composition dependent property the
simulator needs: equilibrium K-values with the saturation-weighted pseudo
correction, the Redlich-Kwong Z factor, phase densities, viscosities,
enthalpies, internal energies, and pressure/temperature dependent porosity.

Conventions
-----------
Units are field units throughout: psi, °F, ft, lbmol, Btu, cp, day. Deck
temperatures are °F; correlations needing an absolute scale convert to °R
internally. The K-value correlation is the one exception and evaluates its
exponential with T in °F, matching the sign convention of its constants.

Component ordering: gas-phase composition vectors `y` run over the full
volatile list, water first, then oil components (lightest to heaviest as
declared), then non-condensable gas components. Oil-phase composition
vectors `x` run over the oil components only.

Every operation returns its analytic partial derivatives alongside the
value; the same compiled kernels back the per-cell property packs used by
the Jacobian assembly.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np

from . import _props
from .errors import (
    DegenerateTemperature,
    MissingCriticalProps,
    NonPhysicalValue,
    PoreSpaceExhausted,
)
from .units import DEFAULT_P_REF, DEFAULT_T_REF

PHASE_CLASSES = ("water", "oil", "gas", "solid")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentProps:
    """Physical constants of one chemical component.

    Optional correlation constants default to inert values (zero
    coefficients); critical properties default to None and are required
    only where a correlation actually consumes them.
    """

    name: str
    phase_class: str
    M: float
    p_crit: Optional[float] = None
    T_crit: Optional[float] = None
    rho_ref: Optional[float] = None
    cp: float = 0.0
    ct1: float = 0.0
    ct2: float = 0.0
    cpt: float = 0.0
    cpg1: float = 0.0
    cpg2: float = 0.0
    cpg3: float = 0.0
    cpg4: float = 0.0
    hvr: float = 0.0
    ev: float = 1.0
    avg: Optional[float] = None
    bvg: float = 0.0
    avisc: Optional[float] = None
    bvisc: float = 0.0
    kv1: float = 0.0
    kv2: float = 0.0
    kv3: float = 0.0
    kv4: float = 0.0
    kv5: float = 0.0

    def validate(self) -> None:
        if self.phase_class not in PHASE_CLASSES:
            raise NonPhysicalValue(
                f"component {self.name}: unknown phase class {self.phase_class!r}"
            )
        if not self.M > 0.0:
            raise NonPhysicalValue(
                f"component {self.name}: molar mass must be positive, got {self.M}"
            )
        if self.phase_class in ("water", "oil", "solid"):
            if self.rho_ref is None or not self.rho_ref > 0.0:
                raise NonPhysicalValue(
                    f"component {self.name}: {self.phase_class} class requires "
                    f"a positive reference density, got {self.rho_ref}"
                )
        if self.hvr > 0.0 and not 0.0 < self.ev <= 1.0:
            raise NonPhysicalValue(
                f"component {self.name}: vaporization exponent must lie in "
                f"(0, 1] when hvr > 0, got {self.ev}"
            )
        if self.hvr > 0.0 and self.T_crit is None:
            raise NonPhysicalValue(
                f"component {self.name}: vaporization heat requires T_crit"
            )


@dataclass(frozen=True)
class FluidModel:
    """Ordered component set plus reference conditions.

    The canonical ordering used by every array-valued operation is
    water, oils (as declared), gases (as declared), then the optional
    solid. The pseudo-K correction applies to water and to the single
    heaviest oil component (largest molar mass).
    """

    water: ComponentProps
    oils: Tuple[ComponentProps, ...]
    gases: Tuple[ComponentProps, ...]
    solid: Optional[ComponentProps] = None
    eps: float = 1e-4
    p_ref: float = DEFAULT_P_REF
    t_ref: float = DEFAULT_T_REF

    def __post_init__(self):
        self.water.validate()
        for comp in self.oils + self.gases:
            comp.validate()
        if self.solid is not None:
            self.solid.validate()
        if self.water.phase_class != "water":
            raise NonPhysicalValue("water slot must hold a water-class component")
        for comp in self.oils:
            if comp.phase_class != "oil":
                raise NonPhysicalValue(
                    f"component {comp.name} in oil slot is {comp.phase_class}-class"
                )
        for comp in self.gases:
            if comp.phase_class != "gas":
                raise NonPhysicalValue(
                    f"component {comp.name} in gas slot is {comp.phase_class}-class"
                )
        if not self.eps > 0.0:
            raise NonPhysicalValue(f"pseudo-K epsilon must be positive, got {self.eps}")
        if len(self.oils) == 0:
            raise NonPhysicalValue("at least one oil component is required")

    @property
    def nco(self) -> int:
        return len(self.oils)

    @property
    def ncg(self) -> int:
        return len(self.gases)

    @property
    def nfull(self) -> int:
        """Length of a full gas-phase composition vector."""
        return 1 + self.nco + self.ncg

    @property
    def volatile(self) -> Tuple[ComponentProps, ...]:
        """Components that partition between liquid and gas: water + oils."""
        return (self.water,) + self.oils

    @property
    def gas_capable(self) -> Tuple[ComponentProps, ...]:
        return (self.water,) + self.oils + self.gases

    @property
    def heavy_oil_index(self) -> int:
        """Index into oils of the heaviest component (pseudo-K target)."""
        masses = [c.M for c in self.oils]
        return int(np.argmax(masses))

    @property
    def names(self) -> Tuple[str, ...]:
        out = [c.name for c in self.gas_capable]
        if self.solid is not None:
            out.append(self.solid.name)
        return tuple(out)

    def component_index(self, name: str) -> int:
        """Index of a component in the canonical full ordering."""
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown component {name!r}") from None


# ---------------------------------------------------------------------------
# result records
# ---------------------------------------------------------------------------

class KValueResult(NamedTuple):
    K: float
    dK_dp: float
    dK_dT: float


class PseudoKResult(NamedTuple):
    """Pseudo K values over (water, oils...), with partials."""

    kstar: np.ndarray
    dK_dp: np.ndarray
    dK_dT: np.ndarray
    dK_dSw: np.ndarray
    dK_dSo: np.ndarray


class ZFactorResult(NamedTuple):
    Z: float
    dZ_dp: float
    dZ_dT: float
    dZ_dy: np.ndarray


class DensityResult(NamedTuple):
    rho: float
    drho_dp: float
    drho_dT: float


class OilDensityResult(NamedTuple):
    rho: float
    drho_dp: float
    drho_dT: float
    drho_dx: np.ndarray


class ViscosityResult(NamedTuple):
    mu_w: float
    mu_o: float
    mu_g: float
    dmu_w_dT: float
    dmu_o_dT: float
    dmu_g_dT: float
    dmu_o_dx: np.ndarray
    dmu_g_dy: np.ndarray


class EnthalpyResult(NamedTuple):
    H_w: float
    H_o: float
    H_g: float
    H_gc: np.ndarray
    dH_w_dT: float
    dH_o_dT: float
    dH_g_dT: float
    dH_o_dx: np.ndarray
    dH_g_dy: np.ndarray


class InternalEnergyResult(NamedTuple):
    U_w: float
    U_o: float
    U_g: float
    U_r: float
    U_c: float
    dU_r_dT: float
    dU_c_dT: float


class PorosityResult(NamedTuple):
    phi_f: float
    phi: float
    dphi_dp: float
    dphi_dT: float
    dphif_dp: float
    dphif_dT: float
    dphif_dCc: float


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def k_value(comp: ComponentProps, p: float, t: float) -> KValueResult:
    """Equilibrium ratio K = (kv1/p + kv2·p + kv3)·exp(kv4/(T − kv5)).

    T and kv5 are °F. Raises DegenerateTemperature when T sits on the
    correlation's pole; a component with all-zero prefactor constants
    yields K = 0 without touching the exponential.
    """
    if p <= 0.0:
        raise NonPhysicalValue(f"k_value requires p > 0, got {p}")
    if comp.kv1 == 0.0 and comp.kv2 == 0.0 and comp.kv3 == 0.0:
        return KValueResult(0.0, 0.0, 0.0)
    if abs(t - comp.kv5) < 1e-9:
        raise DegenerateTemperature(
            f"component {comp.name}: T = {t} °F is within 1e-9 of kv5 = {comp.kv5}"
        )
    k, dkdp, dkdt = _props.k_value(
        comp.kv1, comp.kv2, comp.kv3, comp.kv4, comp.kv5, p, t
    )
    return KValueResult(k, dkdp, dkdt)


def pseudo_k_values(
    fluid: FluidModel, p: float, t: float, s_w: float, s_o: float
) -> PseudoKResult:
    """Saturation-corrected K values over (water, oils...).

    Water gets the factor S_w/(S_w+ε); among the oil components only the
    heaviest gets S_o/(S_o+ε); lighter oils keep their raw K.
    """
    if s_w < 0.0 or s_o < 0.0:
        raise NonPhysicalValue(
            f"saturations must be non-negative, got S_w={s_w}, S_o={s_o}"
        )
    nvol = 1 + fluid.nco
    kstar = np.zeros(nvol)
    dkdp = np.zeros(nvol)
    dkdt = np.zeros(nvol)
    dkdsw = np.zeros(nvol)
    dkdso = np.zeros(nvol)
    heavy = 1 + fluid.heavy_oil_index
    for i, comp in enumerate(fluid.volatile):
        k, dp_, dt_ = k_value(comp, p, t)
        if i == 0:
            f, dfds = _props.per_factor(s_w, fluid.eps)
            kstar[i] = f * k
            dkdp[i] = f * dp_
            dkdt[i] = f * dt_
            dkdsw[i] = dfds * k
        elif i == heavy:
            f, dfds = _props.per_factor(s_o, fluid.eps)
            kstar[i] = f * k
            dkdp[i] = f * dp_
            dkdt[i] = f * dt_
            dkdso[i] = dfds * k
        else:
            kstar[i] = k
            dkdp[i] = dp_
            dkdt[i] = dt_
    return PseudoKResult(kstar, dkdp, dkdt, dkdsw, dkdso)


def z_factor(fluid: FluidModel, p: float, t: float, y: np.ndarray) -> ZFactorResult:
    """Redlich-Kwong compressibility of the gas mixture.

    `y` runs over the full gas ordering (water, oils..., gases...) and
    must sum to 1 within 1e-9. Solves the cubic
    Z³ − Z² + (A − B − B²)Z − AB = 0 for its largest real root; the
    residual at the returned root is below 1e-10.
    """
    comps = fluid.gas_capable
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (len(comps),):
        raise NonPhysicalValue(
            f"gas composition must have length {len(comps)}, got {y.shape}"
        )
    if abs(float(y.sum()) - 1.0) > 1e-9:
        raise NonPhysicalValue(
            f"gas composition must sum to 1 within 1e-9, got {float(y.sum())!r}"
        )
    tcrit_r = np.empty(len(comps))
    pcrit = np.empty(len(comps))
    for i, comp in enumerate(comps):
        if y[i] > 0.0 and (comp.T_crit is None or comp.p_crit is None):
            raise MissingCriticalProps(
                f"component {comp.name} appears in the gas phase but has no "
                f"critical properties"
            )
        tcrit_r[i] = np.nan if comp.T_crit is None else comp.T_crit + 459.67
        pcrit[i] = np.nan if comp.p_crit is None else comp.p_crit
    weights = np.where(np.isnan(tcrit_r), 0.0, y)
    tcrit_r = np.nan_to_num(tcrit_r, nan=1.0)
    pcrit = np.nan_to_num(pcrit, nan=1.0)
    dzdy = np.zeros(len(comps))
    z, dzdp, dzdt = _props.z_factor_mix(weights, tcrit_r, pcrit, p, t, dzdy)
    return ZFactorResult(z, dzdp, dzdt, dzdy)


def gas_density(
    p: float, t: float, z: float, dz_dp: float = 0.0, dz_dt: float = 0.0
) -> DensityResult:
    """Gas molar density p/(Z·R·T), R = 10.7316 psi·ft³/(lbmol·°R).

    Pass the Z-factor partials to chain them into the returned pressure
    and temperature derivatives.
    """
    if p <= 0.0 or z <= 0.0:
        raise NonPhysicalValue(f"gas_density requires p > 0 and Z > 0, got {p}, {z}")
    rho, drdp, drdt = _props.gas_density(p, t, z, dz_dp, dz_dt)
    return DensityResult(rho, drdp, drdt)


def liquid_component_density(
    comp: ComponentProps,
    p: float,
    t: float,
    p_ref: float = DEFAULT_P_REF,
    t_ref: float = DEFAULT_T_REF,
) -> DensityResult:
    """Compressibility/expansion correlation around (p_ref, T_ref)."""
    if comp.rho_ref is None:
        raise NonPhysicalValue(f"component {comp.name} has no reference density")
    rho, drdp, drdt = _props.liquid_density(
        comp.rho_ref, comp.cp, comp.ct1, comp.ct2, comp.cpt, p_ref, t_ref, p, t
    )
    return DensityResult(rho, drdp, drdt)


def oil_phase_density(
    fluid: FluidModel, p: float, t: float, x: np.ndarray
) -> OilDensityResult:
    """Harmonic mixture density 1/ρ_o = Σ x_i/ρ_i over oil components."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (fluid.nco,):
        raise NonPhysicalValue(f"x must have length {fluid.nco}, got {x.shape}")
    inv = 0.0
    dinv_dp = 0.0
    dinv_dt = 0.0
    rhos = np.empty(fluid.nco)
    for i, comp in enumerate(fluid.oils):
        r, drdp, drdt = liquid_component_density(comp, p, t, fluid.p_ref, fluid.t_ref)
        rhos[i] = r
        inv += x[i] / r
        dinv_dp += -x[i] * drdp / (r * r)
        dinv_dt += -x[i] * drdt / (r * r)
    if inv <= 0.0:
        raise NonPhysicalValue("oil composition yielded non-positive molar volume")
    rho = 1.0 / inv
    drho_dx = np.array([-(rho * rho) / rhos[i] for i in range(fluid.nco)])
    return OilDensityResult(rho, -(rho * rho) * dinv_dp, -(rho * rho) * dinv_dt, drho_dx)


def phase_viscosities(
    fluid: FluidModel, p: float, t: float, x: np.ndarray, y: np.ndarray
) -> ViscosityResult:
    """Water, oil, and gas viscosities with temperature/composition partials.

    Liquids follow μ = avisc·exp(bvisc/T); the oil phase mixes
    logarithmically, μ_o = Π μ_i^{x_i}. Gas components follow
    μ = avg·T^bvg and mix with √M weighting.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if fluid.water.avisc is None:
        raise NonPhysicalValue("water component has no liquid viscosity constants")
    mu_w, dmu_w = _props.liquid_viscosity(fluid.water.avisc, fluid.water.bvisc, t)

    ln_mu = 0.0
    dln_dt = 0.0
    dln_dx = np.empty(fluid.nco)
    for i, comp in enumerate(fluid.oils):
        if comp.avisc is None:
            raise NonPhysicalValue(f"oil component {comp.name} has no avisc")
        mu_i, dmu_i = _props.liquid_viscosity(comp.avisc, comp.bvisc, t)
        l = np.log(mu_i)
        ln_mu += x[i] * l
        dln_dt += x[i] * dmu_i / mu_i
        dln_dx[i] = l
    mu_o = float(np.exp(ln_mu))

    comps = fluid.gas_capable
    num = 0.0
    den = 0.0
    dnum_dt = 0.0
    mu_c = np.empty(len(comps))
    wsq = np.empty(len(comps))
    for i, comp in enumerate(comps):
        if comp.avg is None:
            if y[i] > 0.0:
                raise NonPhysicalValue(
                    f"component {comp.name} appears in the gas phase but has "
                    f"no gas viscosity constants"
                )
            mu_c[i] = 0.0
            wsq[i] = 0.0
            continue
        m, dm = _props.gas_component_viscosity(comp.avg, comp.bvg, t)
        mu_c[i] = m
        wsq[i] = np.sqrt(comp.M)
        num += m * y[i] * wsq[i]
        den += y[i] * wsq[i]
        dnum_dt += dm * y[i] * wsq[i]
    if den <= 0.0:
        raise NonPhysicalValue("gas composition has zero total √M weight")
    mu_g = num / den
    dmu_g_dt = dnum_dt / den
    dmu_g_dy = np.array(
        [wsq[i] * (mu_c[i] - mu_g) / den if wsq[i] > 0.0 else 0.0
         for i in range(len(comps))]
    )
    return ViscosityResult(
        mu_w, mu_o, mu_g,
        dmu_w, mu_o * dln_dt, dmu_g_dt,
        mu_o * dln_dx, dmu_g_dy,
    )


def phase_enthalpies(
    fluid: FluidModel, p: float, t: float, x: np.ndarray, y: np.ndarray
) -> EnthalpyResult:
    """Phase enthalpies from ideal-gas polynomials and vaporization heats.

    Gas component enthalpy integrates cpg(T) from T_ref; liquid component
    enthalpy subtracts u(T_crit−T)·hvr·(T_crit−T)^ev. Temperatures here
    stay on the °F scale of the polynomial constants.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    comps = fluid.gas_capable
    h_gc = np.empty(len(comps))
    dh_gc = np.empty(len(comps))
    for i, comp in enumerate(comps):
        h, dh = _props.gas_enthalpy(
            comp.cpg1, comp.cpg2, comp.cpg3, comp.cpg4, fluid.t_ref, t
        )
        h_gc[i] = h
        dh_gc[i] = dh

    def liquid_enthalpy(idx, comp):
        tc = comp.T_crit if comp.T_crit is not None else -np.inf
        hv, dhv = _props.vaporization_enthalpy(comp.hvr, comp.ev, tc, t)
        return h_gc[idx] - hv, dh_gc[idx] - dhv

    h_w, dh_w = liquid_enthalpy(0, fluid.water)
    h_o = 0.0
    dh_o = 0.0
    dh_o_dx = np.empty(fluid.nco)
    for i, comp in enumerate(fluid.oils):
        h_i, dh_i = liquid_enthalpy(1 + i, comp)
        h_o += x[i] * h_i
        dh_o += x[i] * dh_i
        dh_o_dx[i] = h_i
    h_g = float(np.dot(y, h_gc))
    dh_g = float(np.dot(y, dh_gc))
    return EnthalpyResult(h_w, h_o, h_g, h_gc, dh_w, dh_o, dh_g, dh_o_dx, h_gc.copy())


def internal_energies(
    p: float,
    t: float,
    rho_w: float,
    rho_o: float,
    rho_g: float,
    h_w: float,
    h_o: float,
    h_g: float,
    rock_cp1: float,
    rock_cp2: float,
    coke_cp: float,
    t_ref: float = DEFAULT_T_REF,
) -> InternalEnergyResult:
    """Internal energies U_α = H_α − p/ρ_α plus rock (Btu/ft³) and coke."""
    for name, rho in (("water", rho_w), ("oil", rho_o), ("gas", rho_g)):
        if rho <= 0.0:
            raise NonPhysicalValue(f"{name} density must be positive, got {rho}")
    u_r, du_r = _props.rock_internal_energy(rock_cp1, rock_cp2, t_ref, t)
    u_c = coke_cp * (t - t_ref)
    return InternalEnergyResult(
        h_w - p / rho_w,
        h_o - p / rho_o,
        h_g - p / rho_g,
        u_r,
        u_c,
        du_r,
        coke_cp,
    )


def porosity(
    rock,
    p: float,
    t: float,
    c_c: float,
    mode: str = "linear",
    rho_coke: Optional[float] = None,
) -> PorosityResult:
    """Fluid and total porosity at (p, T) with coke pore occupancy.

    `rock` supplies phi_ref, cpor, ctpor, cptpor, p_ref, t_ref (duck
    typed; see rockfluid.RockModel). `mode` selects the linear or
    exponential compressibility law. Raises PoreSpaceExhausted when the
    coke concentration fills the pore volume.
    """
    if mode not in ("linear", "nonlinear"):
        raise NonPhysicalValue(f"porosity mode must be linear|nonlinear, got {mode!r}")
    if rho_coke is None:
        rho_coke = getattr(rock, "rho_coke", None)
    if c_c != 0.0 and (rho_coke is None or rho_coke <= 0.0):
        raise NonPhysicalValue("coke present but no positive coke density given")
    phi, dphi_dp, dphi_dt = _props.porosity(
        rock.phi_ref, rock.cpor, rock.ctpor, rock.cptpor,
        rock.p_ref, rock.t_ref, mode == "nonlinear", p, t,
    )
    occupied = 0.0 if c_c == 0.0 else c_c / rho_coke
    phi_f = phi - occupied
    if phi_f <= 0.0:
        raise PoreSpaceExhausted(
            f"coke concentration {c_c} lbmol/ft³ fills the pore volume "
            f"(phi = {phi:.6g})"
        )
    dphif_dcc = 0.0 if rho_coke is None or rho_coke <= 0.0 else -1.0 / rho_coke
    return PorosityResult(phi_f, phi, dphi_dp, dphi_dt, dphi_dp, dphi_dt, dphif_dcc)
