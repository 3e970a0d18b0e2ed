"""Scalar property kernels compiled with numba.

Every correlation lives here exactly once, as an njit scalar (or small-array)
function returning the value together with its analytic partial derivatives.
The public `pvt` API wraps these for validation and ergonomics; the assembly
kernels call them directly inside compiled loops, so the Python layer and the
hot path evaluate identical code.

Temperature convention: inputs are °F. Functions that need an absolute scale
convert to °R internally (offset 459.67); the K-value correlation stays in °F
(see `units.kv_temperature`).
"""

import math

import numpy as np
from numba import njit

RANKINE_OFFSET = 459.67
R_GAS_DENSITY = 10.7316
R_ARRHENIUS = 1.9859


@njit(cache=True)
def k_value(kv1, kv2, kv3, kv4, kv5, p, t):
    """Equilibrium ratio K = (kv1/p + kv2·p + kv3)·exp(kv4/(T − kv5)).

    T and kv5 in °F. Returns (K, dK/dp, dK/dT). A zero prefactor yields
    K = 0 without evaluating the exponential (the degenerate-temperature
    guard belongs to the caller, which can report a proper error).
    """
    pref = kv1 / p + kv2 * p + kv3
    dpref = -kv1 / (p * p) + kv2
    if pref == 0.0 and dpref == 0.0:
        return 0.0, 0.0, 0.0
    tdiff = t - kv5
    e = math.exp(kv4 / tdiff)
    k = pref * e
    dkdp = dpref * e
    dkdt = -k * kv4 / (tdiff * tdiff)
    return k, dkdp, dkdt


@njit(cache=True)
def per_factor(s, eps):
    """Pseudo-equilibrium correction S/(S+ε) with derivative in S."""
    den = s + eps
    f = s / den
    dfds = eps / (den * den)
    return f, dfds


@njit(cache=True)
def liquid_density(rho_ref, cp, ct1, ct2, cpt, p_ref, t_ref, p, t):
    """Liquid component molar density and (d/dp, d/dT).

    ρ = ρ_ref·exp(cp·Δp − ct1·ΔT − ct2/2·ΔT² + cpt·Δp·ΔT)
    """
    dp = p - p_ref
    dt = t - t_ref
    expo = cp * dp - ct1 * dt - 0.5 * ct2 * dt * dt + cpt * dp * dt
    rho = rho_ref * math.exp(expo)
    drdp = rho * (cp + cpt * dt)
    drdt = rho * (-ct1 - ct2 * dt + cpt * dp)
    return rho, drdp, drdt


@njit(cache=True)
def cubic_largest_root(a_coef, b_coef):
    """Largest real root of Z³ − Z² + (A − B − B²)Z − AB = 0.

    Closed-form (Cardano / trigonometric) followed by two Newton polish
    steps so the residual at the returned root is at machine level.
    """
    c1 = a_coef - b_coef - b_coef * b_coef
    c0 = -a_coef * b_coef
    # depressed cubic t^3 + pt + q with Z = t + 1/3
    p = c1 - 1.0 / 3.0
    q = -2.0 / 27.0 + c1 / 3.0 + c0
    disc = 0.25 * q * q + p * p * p / 27.0
    if disc >= 0.0:
        s = math.sqrt(disc)
        u = -0.5 * q + s
        v = -0.5 * q - s
        cu = math.copysign(abs(u) ** (1.0 / 3.0), u)
        cv = math.copysign(abs(v) ** (1.0 / 3.0), v)
        z = cu + cv + 1.0 / 3.0
    else:
        # three real roots; take the largest (k = 0 branch of the cosine form)
        rp = math.sqrt(-p / 3.0)
        arg = 3.0 * q / (2.0 * p * rp)
        if arg > 1.0:
            arg = 1.0
        elif arg < -1.0:
            arg = -1.0
        theta = math.acos(arg) / 3.0
        z = 2.0 * rp * math.cos(theta) + 1.0 / 3.0
    for _ in range(3):
        g = ((z - 1.0) * z + c1) * z + c0
        gp = (3.0 * z - 2.0) * z + c1
        if gp == 0.0:
            break
        z -= g / gp
    return z


@njit(cache=True)
def z_factor_mix(w, tcrit_r, pcrit, p, t, dzdw):
    """Redlich-Kwong Z factor for a gas mixture, with derivatives.

    w: composition weights over the gas-phase constituents; tcrit_r in °R.
    Fills dzdw (same length as w) and returns (Z, dZ/dp, dZ/dT).
    Pseudo-criticals from a = Σ w·Tc·√(Tc/pc), b = Σ w·Tc/pc via
    A = 0.427480·p·a^1.5·b^0.25/T^2.5, B = 0.086640·p·b/T (T in °R).
    """
    tr = t + RANKINE_OFFSET
    n = w.shape[0]
    a = 0.0
    b = 0.0
    for i in range(n):
        ti = tcrit_r[i]
        bi = ti / pcrit[i]
        a += w[i] * ti * math.sqrt(bi)
        b += w[i] * bi
    if a <= 0.0 or b <= 0.0:
        for i in range(n):
            dzdw[i] = 0.0
        return 1.0, 0.0, 0.0
    coef_a = 0.427480 * p * a ** 1.5 * b ** 0.25 / tr ** 2.5
    coef_b = 0.086640 * p * b / tr
    z = cubic_largest_root(coef_a, coef_b)
    gp = (3.0 * z - 2.0) * z + (coef_a - coef_b - coef_b * coef_b)
    if abs(gp) < 1e-30:
        gp = 1e-30
    dzda = -(z - coef_b) / gp
    dzdb = -((-1.0 - 2.0 * coef_b) * z - coef_a) / gp
    da_dp = coef_a / p
    db_dp = coef_b / p
    da_dtr = -2.5 * coef_a / tr
    db_dtr = -coef_b / tr
    dzdp = dzda * da_dp + dzdb * db_dp
    dzdt = dzda * da_dtr + dzdb * db_dtr
    for i in range(n):
        ti = tcrit_r[i]
        bi = ti / pcrit[i]
        dai = ti * math.sqrt(bi)
        da_dw = 1.5 * coef_a / a * dai + 0.25 * coef_a / b * bi
        db_dw = coef_b / b * bi
        dzdw[i] = dzda * da_dw + dzdb * db_dw
    return z, dzdp, dzdt


@njit(cache=True)
def gas_density(p, t, z, dzdp, dzdt):
    """Gas molar density ρ_g = p/(Z·R·T) with (d/dp, d/dT); T °R inside."""
    tr = t + RANKINE_OFFSET
    rho = p / (z * R_GAS_DENSITY * tr)
    drdp = rho * (1.0 / p - dzdp / z)
    drdt = rho * (-dzdt / z - 1.0 / tr)
    return rho, drdp, drdt


@njit(cache=True)
def liquid_viscosity(avisc, bvisc, t):
    """Liquid component viscosity μ = avisc·exp(bvisc/T), T °R inside."""
    tr = t + RANKINE_OFFSET
    mu = avisc * math.exp(bvisc / tr)
    dmudt = -mu * bvisc / (tr * tr)
    return mu, dmudt


@njit(cache=True)
def gas_component_viscosity(avg, bvg, t):
    """Gas component viscosity μ = avg·T^bvg, T °R inside."""
    tr = t + RANKINE_OFFSET
    mu = avg * tr ** bvg
    dmudt = mu * bvg / tr
    return mu, dmudt


@njit(cache=True)
def gas_enthalpy(cpg1, cpg2, cpg3, cpg4, t_ref, t):
    """Ideal-gas enthalpy ∫_{T_ref}^{T} cpg(t) dt (°F basis) and d/dT."""
    h = (
        cpg1 * (t - t_ref)
        + cpg2 / 2.0 * (t * t - t_ref * t_ref)
        + cpg3 / 3.0 * (t ** 3 - t_ref ** 3)
        + cpg4 / 4.0 * (t ** 4 - t_ref ** 4)
    )
    dhdt = cpg1 + cpg2 * t + cpg3 * t * t + cpg4 * t ** 3
    return h, dhdt


@njit(cache=True)
def vaporization_enthalpy(hvr, ev, tcrit, t):
    """Heat of vaporization u(T_crit−T)·hvr·(T_crit−T)^ev, °F basis.

    Heaviside(0) = 0, so the value is continuous (→ 0) at T = T_crit.
    """
    if t >= tcrit or hvr == 0.0:
        return 0.0, 0.0
    dt = tcrit - t
    h = hvr * dt ** ev
    dhdt = -ev * hvr * dt ** (ev - 1.0)
    return h, dhdt


@njit(cache=True)
def rock_internal_energy(cp1, cp2, t_ref, t):
    """Rock internal energy per bulk volume, Btu/ft³, and d/dT."""
    u = cp1 * (t - t_ref) + 0.5 * cp2 * (t * t - t_ref * t_ref)
    dudt = cp1 + cp2 * t
    return u, dudt


@njit(cache=True)
def porosity(phi_ref, cpor, ctpor, cptpor, p_ref, t_ref, nonlinear, p, t):
    """Rock porosity φ(p, T) and (d/dp, d/dT); nonlinear selects e^ctot."""
    dp = p - p_ref
    dt = t - t_ref
    ctot = cpor * dp - ctpor * dt + cptpor * dp * dt
    dc_dp = cpor + cptpor * dt
    dc_dt = -ctpor + cptpor * dp
    if nonlinear:
        phi = phi_ref * math.exp(ctot)
        return phi, phi * dc_dp, phi * dc_dt
    phi = phi_ref * (1.0 + ctot)
    return phi, phi_ref * dc_dp, phi_ref * dc_dt


@njit(cache=True)
def arrhenius(freq, ea, t):
    """Arrhenius coefficient A·exp(−Ea/(R·T)) and d/dT; T °R inside."""
    tr = t + RANKINE_OFFSET
    k = freq * math.exp(-ea / (R_ARRHENIUS * tr))
    dkdt = k * ea / (R_ARRHENIUS * tr * tr)
    return k, dkdt


LAW_GAS_OIL = 0
LAW_GAS_SOLID = 1
LAW_CRACKING = 2


@njit(cache=True)
def reaction_rate_one(law, a, ea, t, pp, fm, cc, ccmax):
    """One reaction rate r and partials (dT, dpp, dfm, dcc).

    pp: oxidizer partial pressure factor (already clamped ≥ 0),
    fm: fuel molar concentration φ_f·S_o·ρ_o·x_fuel (clamped ≥ 0),
    cc: coke concentration (clamped ≥ 0). The caller owns the clamp
    branches and zeroes the chained derivatives there.
    """
    k, dkdt = arrhenius(a, ea, t)
    if law == LAW_GAS_OIL:
        r = k * pp * fm
        return r, dkdt * pp * fm, k * fm, k * pp, 0.0
    if law == LAW_GAS_SOLID:
        r = k * pp * cc
        return r, dkdt * pp * cc, k * cc, 0.0, k * pp
    # cracking with the coke-limit factor
    ratio = cc / ccmax
    lim = 1.0 - ratio ** 5
    if lim <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    dlim = -5.0 * ratio ** 4 / ccmax
    r = k * fm * lim
    return r, dkdt * fm * lim, 0.0, k * lim, k * fm * dlim


@njit(cache=True)
def stone2(krocw, krow, krw, krog, krg):
    """Stone's second three-phase oil relperm, clamped to [0, 1].

    Returns (k_ro, ∂/∂krow, ∂/∂krw, ∂/∂krog, ∂/∂krg); the partials are
    zero wherever the clamp is active.
    """
    if krocw <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    fo = krow / krocw + krw
    fg = krog / krocw + krg
    raw = krocw * (fo * fg - krw - krg)
    if raw <= 0.0:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    if raw >= 1.0:
        return 1.0, 0.0, 0.0, 0.0, 0.0
    d_krow = fg
    d_krw = krocw * (fg - 1.0)
    d_krog = fo
    d_krg = krocw * (fo - 1.0)
    return raw, d_krow, d_krw, d_krog, d_krg


@njit(cache=True)
def interp1(xs, ys, x):
    """Piecewise-linear interpolation with end clamping.

    xs strictly increasing. Outside the table the end value is held with
    zero slope. Returns (y, dy/dx).
    """
    n = xs.shape[0]
    if x <= xs[0]:
        return ys[0], 0.0
    if x >= xs[n - 1]:
        return ys[n - 1], 0.0
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= x:
            lo = mid
        else:
            hi = mid
    slope = (ys[lo + 1] - ys[lo]) / (xs[lo + 1] - xs[lo])
    return ys[lo] + slope * (x - xs[lo]), slope


@njit(cache=True)
def harmonic_pair(a, b):
    """Harmonic face average 2ab/(a+b) with partials; 0 when either is 0."""
    s = a + b
    if a <= 0.0 or b <= 0.0 or s <= 0.0:
        return 0.0, 0.0, 0.0
    h = 2.0 * a * b / s
    dha = 2.0 * b * b / (s * s)
    dhb = 2.0 * a * a / (s * s)
    return h, dha, dhb
