"""Arrhenius reaction kinetics: rates, mass sources, heat sources.

Reactions are declared in the deck with a rate-law descriptor naming one of
three built-in structures:

  gas-oil    r = k(T)·(y_ox·p_g)·(φ_f·S_o·ρ_o·x_fuel)
  cracking   r = k(T)·(φ_f·S_o·ρ_o·x_fuel)·max(0, 1 − (C_c/C_cmax)^5)
  gas-solid  r = k(T)·(y_ox·p_g)·C_c

with k(T) = A·exp(−E_a/(R·T)), R = 1.9859 Btu/(lbmol·°R), T absolute. The
oxidizer is the unique gas-class reactant of the reaction; the fuel is the
unique oil-class reactant. Every reactant factor is clamped at zero so an
absent species is never consumed.

Mass sources are q_c = Σ_R s_{c,R}·r_R (reactant coefficients negative) and
the heat source is Q = Σ_R H_R·r_R.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from . import _props
from .errors import NonPhysicalValue, StoichiometryImbalance
from .pvt import FluidModel

RATE_LAWS = ("gas-oil", "gas-solid", "cracking")
LAW_CODES = {
    "gas-oil": _props.LAW_GAS_OIL,
    "gas-solid": _props.LAW_GAS_SOLID,
    "cracking": _props.LAW_CRACKING,
}


@dataclass(frozen=True)
class Reaction:
    """One deck-declared reaction: rate constants plus stoichiometry.

    stoich maps component name to signed coefficient (reactants negative,
    products positive), kept as an ordered tuple of pairs.
    """

    law: str
    a: float
    ea: float
    h: float
    stoich: Tuple[Tuple[str, float], ...]

    def validate(self) -> None:
        if self.law not in RATE_LAWS:
            raise NonPhysicalValue(
                f"rate law must be one of {RATE_LAWS}, got {self.law!r}"
            )
        if self.a < 0.0:
            raise NonPhysicalValue(f"frequency factor must be >= 0, got {self.a}")
        coefs = [c for _, c in self.stoich]
        if not any(c < 0.0 for c in coefs) or not any(c > 0.0 for c in coefs):
            raise NonPhysicalValue(
                "a reaction needs at least one reactant (negative coefficient) "
                "and one product (positive coefficient)"
            )


@dataclass(frozen=True)
class ReactionModel:
    """Index-resolved reaction set over a fluid model's component ordering.

    nmatrix is (ncomp, nreac) with the canonical component ordering
    (water, oils..., gases..., solid). fuel_index points into the oil
    list, ox_index into the full gas ordering; −1 marks not-applicable.
    """

    nmatrix: np.ndarray
    a: np.ndarray
    ea: np.ndarray
    h: np.ndarray
    laws: Tuple[str, ...]
    law_codes: np.ndarray
    fuel_index: np.ndarray
    ox_index: np.ndarray
    c_cmax: float
    component_names: Tuple[str, ...]

    @property
    def nreac(self) -> int:
        return self.a.shape[0]

    @classmethod
    def build(
        cls,
        fluid: FluidModel,
        reactions: Tuple[Reaction, ...],
        c_cmax: Optional[float] = None,
    ) -> "ReactionModel":
        names = fluid.names
        ncomp = len(names)
        nr = len(reactions)
        nmatrix = np.zeros((ncomp, nr))
        a = np.zeros(nr)
        ea = np.zeros(nr)
        h = np.zeros(nr)
        codes = np.zeros(nr, dtype=np.int64)
        fuel = np.full(nr, -1, dtype=np.int64)
        ox = np.full(nr, -1, dtype=np.int64)
        oil_names = [c.name for c in fluid.oils]
        gas_names = [c.name for c in fluid.gases]
        for r, reac in enumerate(reactions):
            reac.validate()
            a[r], ea[r], h[r] = reac.a, reac.ea, reac.h
            codes[r] = LAW_CODES[reac.law]
            for name, coef in reac.stoich:
                try:
                    ci = names.index(name)
                except ValueError:
                    raise NonPhysicalValue(
                        f"reaction {r + 1}: unknown component {name!r}"
                    ) from None
                if nmatrix[ci, r] != 0.0:
                    raise NonPhysicalValue(
                        f"reaction {r + 1}: component {name!r} listed twice"
                    )
                nmatrix[ci, r] = coef
            oil_reactants = [
                i for i in range(len(oil_names)) if nmatrix[1 + i, r] < 0.0
            ]
            gas_reactants = [
                i for i in range(len(gas_names))
                if nmatrix[1 + fluid.nco + i, r] < 0.0
            ]
            if reac.law in ("gas-oil", "cracking"):
                if len(oil_reactants) != 1:
                    raise NonPhysicalValue(
                        f"reaction {r + 1}: {reac.law} law requires exactly one "
                        f"oil-class reactant, found {len(oil_reactants)}"
                    )
                fuel[r] = oil_reactants[0]
            if reac.law in ("gas-oil", "gas-solid"):
                if len(gas_reactants) != 1:
                    raise NonPhysicalValue(
                        f"reaction {r + 1}: {reac.law} law requires exactly one "
                        f"gas-class reactant, found {len(gas_reactants)}"
                    )
                ox[r] = 1 + fluid.nco + gas_reactants[0]
            if reac.law == "gas-solid":
                if fluid.solid is None or nmatrix[ncomp - 1, r] >= 0.0:
                    raise NonPhysicalValue(
                        f"reaction {r + 1}: gas-solid law requires the solid "
                        f"component as a reactant"
                    )
        if any(reac.law == "cracking" for reac in reactions):
            if c_cmax is None or not c_cmax > 0.0:
                raise NonPhysicalValue(
                    "a cracking reaction requires a positive coke limit C_cmax"
                )
        return cls(
            nmatrix=nmatrix,
            a=a,
            ea=ea,
            h=h,
            laws=tuple(reac.law for reac in reactions),
            law_codes=codes,
            fuel_index=fuel,
            ox_index=ox,
            c_cmax=float(c_cmax) if c_cmax is not None else np.inf,
            component_names=names,
        )


class ArrheniusResult(NamedTuple):
    k: float
    dk_dT: float


class RatesResult(NamedTuple):
    """Per-reaction rates and partials with respect to the direct inputs."""

    rates: np.ndarray
    d_dT: np.ndarray
    d_dpg: np.ndarray
    d_dmo: np.ndarray          # ∂r/∂(φ_f·S_o·ρ_o)
    d_dx: np.ndarray           # (nreac, nco)
    d_dy: np.ndarray           # (nreac, nfull)
    d_dCc: np.ndarray


def arrhenius(a: float, ea: float, t: float) -> ArrheniusResult:
    """Rate constant A·exp(−E_a/(R·T)) with T converted to °R."""
    if t <= -459.67:
        raise NonPhysicalValue(f"temperature {t} °F is at or below absolute zero")
    return ArrheniusResult(*_props.arrhenius(a, ea, t))


def reaction_rates(
    model: ReactionModel,
    t: float,
    p_g: float,
    phi_f: float,
    s_o: float,
    rho_o: float,
    x: np.ndarray,
    y: np.ndarray,
    c_c: float,
) -> RatesResult:
    """All reaction rates at one cell state, with direct-input partials.

    `x` runs over oil components, `y` over the full gas ordering, and
    p_g is the gas-phase pressure p + p_cog. Negative reactant factors
    (possible mid-Newton) clamp to zero with zero derivative.
    """
    nr = model.nreac
    rates = np.zeros(nr)
    d_dt = np.zeros(nr)
    d_dpg = np.zeros(nr)
    d_dmo = np.zeros(nr)
    d_dx = np.zeros((nr, x.shape[0]))
    d_dy = np.zeros((nr, y.shape[0]))
    d_dcc = np.zeros(nr)
    mo = phi_f * s_o * rho_o
    mo_c = mo if mo > 0.0 else 0.0
    cc_c = c_c if c_c > 0.0 else 0.0
    for r in range(nr):
        law = model.law_codes[r]
        pp = 0.0
        dpp_dy = 0.0
        dpp_dpg = 0.0
        if model.ox_index[r] >= 0:
            y_ox = y[model.ox_index[r]]
            if y_ox > 0.0:
                pp = y_ox * p_g
                dpp_dy = p_g
                dpp_dpg = y_ox
        fm = 0.0
        dfm_dx = 0.0
        dfm_dmo = 0.0
        if model.fuel_index[r] >= 0:
            xf = x[model.fuel_index[r]]
            if xf > 0.0 and mo_c > 0.0:
                fm = mo_c * xf
                dfm_dx = mo_c
                dfm_dmo = xf
        rr, drt, drpp, drfm, drcc = _props.reaction_rate_one(
            law, model.a[r], model.ea[r], t, pp, fm, cc_c, model.c_cmax
        )
        rates[r] = rr
        d_dt[r] = drt
        d_dpg[r] = drpp * dpp_dpg
        d_dmo[r] = drfm * dfm_dmo
        if model.fuel_index[r] >= 0:
            d_dx[r, model.fuel_index[r]] = drfm * dfm_dx
        if model.ox_index[r] >= 0:
            d_dy[r, model.ox_index[r]] = drpp * dpp_dy
        d_dcc[r] = drcc if c_c >= 0.0 else 0.0
    return RatesResult(rates, d_dt, d_dpg, d_dmo, d_dx, d_dy, d_dcc)


def mass_sources(model: ReactionModel, rates: np.ndarray) -> np.ndarray:
    """Per-component molar sources q_c = Σ_R s_{c,R}·r_R, lbmol/(ft³·day)."""
    return model.nmatrix @ np.asarray(rates, dtype=np.float64)


def heat_source(model: ReactionModel, rates: np.ndarray) -> float:
    """Reaction heat Q = Σ_R H_R·r_R, Btu/(ft³·day)."""
    return float(np.dot(model.h, np.asarray(rates, dtype=np.float64)))


def mass_balance_errors(model: ReactionModel, masses: np.ndarray) -> np.ndarray:
    """Relative mass-balance defect per reaction.

    |Σ_c s_{c,R}·M_c| divided by the reactant-side mass Σ_{s<0} |s|·M.
    """
    masses = np.asarray(masses, dtype=np.float64)
    if masses.shape[0] != model.nmatrix.shape[0]:
        raise NonPhysicalValue(
            f"expected {model.nmatrix.shape[0]} molar masses, got {masses.shape[0]}"
        )
    errs = np.empty(model.nreac)
    for r in range(model.nreac):
        s = model.nmatrix[:, r]
        net = float(np.dot(s, masses))
        reactant_mass = float(np.dot(np.abs(np.minimum(s, 0.0)), masses))
        if reactant_mass <= 0.0:
            raise NonPhysicalValue(f"reaction {r + 1} has no reactant mass")
        errs[r] = abs(net) / reactant_mass
    return errs


def validate_reactions(
    model: ReactionModel, masses: np.ndarray, tol: float = 5e-3
) -> np.ndarray:
    """Check every reaction conserves mass within `tol` relative.

    Returns the per-reaction error vector; raises StoichiometryImbalance
    naming the worst offender otherwise.
    """
    errs = mass_balance_errors(model, masses)
    worst = int(np.argmax(errs))
    if errs[worst] > tol:
        raise StoichiometryImbalance(
            f"reaction {worst + 1} violates mass balance: relative error "
            f"{errs[worst]:.3e} exceeds tolerance {tol:.1e}"
        )
    return errs
