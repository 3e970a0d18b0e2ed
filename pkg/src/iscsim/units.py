"""Field-unit constants and temperature-scale conversions.

The simulator works in oilfield units throughout: psi, °F, ft, md, lbmol,
Btu, day, cp. Every correlation that needs an absolute temperature converts
through `rankine`; the K-value correlation is the single deliberate
exception and stays in °F (see `kv_temperature`).
"""

# Absolute-temperature offset: T[°R] = T[°F] + 459.67
RANKINE_OFFSET = 459.67

# Gas constant for molar gas density, psi·ft³/(lbmol·°R)
R_GAS_DENSITY = 10.7316

# Gas constant for Arrhenius exponents, Btu/(lbmol·°R)
R_ARRHENIUS = 1.9859

# 1 md expressed in ft²; folded with psi→lbf/ft² (×144) and cp→lbf·day/ft²
# into the single Darcy unit constant below.
MD_IN_FT2 = 1.0623e-14
_CP_IN_LBF_DAY_PER_FT2 = 1.0e-3 * 0.2248089431 / 10.76391042 / 86400.0

# Flow constant: q[ft³/day] = DARCY_CONST · (A·k/h)[ft·md] · Δp[psi] / μ[cp]
DARCY_CONST = MD_IN_FT2 * 144.0 / _CP_IN_LBF_DAY_PER_FT2

# Specific weight: γ[psi/ft] = ρ_molar[lbmol/ft³] · M̄[lb/lbmol] / 144
PSI_PER_FT_PER_LB_FT3 = 1.0 / 144.0

# Molar volume of an ideal gas at standard conditions (60 °F, 14.696 psia)
SCF_PER_LBMOL = 379.3

# Default reference conditions for property correlations
DEFAULT_P_REF = 14.7
DEFAULT_T_REF = 77.0


def rankine(t_fahrenheit):
    """Convert °F to °R for absolute-temperature correlations."""
    return t_fahrenheit + RANKINE_OFFSET


def kv_temperature(t_fahrenheit):
    """Temperature argument of the K-value correlation term kv4/(T - kv5).

    Deliberately the identity: the correlation's constants (negative kv5)
    are calibrated in °F. Kept as a function so the convention is flipped
    in exactly one place if ever needed.
    """
    return t_fahrenheit
