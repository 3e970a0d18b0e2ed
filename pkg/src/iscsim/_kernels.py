"""Compiled residual/Jacobian evaluation kernels.

One cell evaluator (`cell_eval`) produces every per-cell property with its
analytic partial derivatives with respect to that cell's unknown block, and
one connection evaluator (`conn_eval`) produces the face flux vector with
derivative blocks for both sides. Both always fill their derivative
buffers; the numeric-Jacobian path reuses the same evaluators and simply
ignores the derivative outputs, so the two Jacobian modes difference the
identical physics.

Per-cell unknown ordering (columns) and residual ordering (rows):
    p, x_0..x_{nco-1}, y_0..y_{ncg-1}, T, S_w, S_g, C_c
    F_W, F_O[0..nco-1], F_G[0..ncg-1], F_E, F_OS, F_GS, F_Coke
with block size nequ = nco + ncg + 5. The full gas composition vector holds
nfull = 1 + nco + ncg entries ordered water, oils, gases; its water/oil
entries come from the pseudo equilibrium ratios.

Units: residual mass rows lbmol/day, energy row Btu/day, constraint rows
dimensionless, coke row lbmol/day.
"""

import math

import numpy as np
from numba import njit, prange

from ._props import (
    gas_component_viscosity,
    gas_enthalpy,
    harmonic_pair,
    interp1,
    k_value,
    liquid_density,
    liquid_viscosity,
    per_factor,
    porosity,
    reaction_rate_one,
    rock_internal_energy,
    stone2,
    vaporization_enthalpy,
    z_factor_mix,
)

R_GAS_DENSITY = 10.7316
RANKINE_OFFSET = 459.67
PSI_PER_FT = 1.0 / 144.0

# liq property table columns (rows: water then oils)
LIQ_RHO_REF, LIQ_CP, LIQ_CT1, LIQ_CT2, LIQ_CPT = 0, 1, 2, 3, 4
LIQ_AVISC, LIQ_BVISC, LIQ_HVR, LIQ_EV, LIQ_TCRIT_F = 5, 6, 7, 8, 9
NLIQ = 10

# gas-capable property table columns (rows: water, oils, gases)
GASP_M, GASP_TCR, GASP_PC, GASP_AVG, GASP_BVG = 0, 1, 2, 3, 4
GASP_CPG1, GASP_CPG2, GASP_CPG3, GASP_CPG4 = 5, 6, 7, 8
NGASP = 9

# rock/solver scalar pack indices
RK_CPOR, RK_CTPOR, RK_CPTPOR, RK_MODE = 0, 1, 2, 3
RK_CP1, RK_CP2, RK_COKE_CP, RK_RHO_COKE = 4, 5, 6, 7
RK_KTW, RK_KTO, RK_KTG, RK_KTR, RK_KTC = 8, 9, 10, 11, 12
RK_PREF, RK_TREF, RK_EPS_PER, RK_KROCW = 13, 14, 15, 16
NRK = 17


@njit(cache=True)
def cell_eval(
    nco, ncg, heavy,
    p, t, sw, sg, x, y, cc,
    liq, gasp, kv, rockp, phi_ref_c,
    swt_s, swt_krw, swt_krow, swt_pcow,
    slt_s, slt_krg, slt_krog, slt_pcog,
    law, rcoef, nmat, fuel_idx, ox_idx, ccmax,
    pot, dpot, beta, dbeta, hph, dhph, yfull, dyfull,
    gam, dgam, pcv, dpcv, kr3, dkr3, ktd,
    acc, dacc, src, dsrc,
):
    """Evaluate one cell's properties, accumulation, sources, constraints.

    Returns (ok, phi_f); ok is False when coke has exhausted the pore
    space, in which case no outputs are valid.
    """
    nfull = 1 + nco + ncg
    nu = nco + ncg + 5
    ct = 1 + nco + ncg
    csw = ct + 1
    csg = ct + 2
    ccc = ct + 3
    row_e = ct
    row_os = ct + 1
    row_gs = ct + 2
    row_ck = ct + 3
    so = 1.0 - sw - sg

    for r in range(nu):
        acc[r] = 0.0
        src[r] = 0.0
        for u in range(nu):
            dacc[r, u] = 0.0
            dsrc[r, u] = 0.0
    for a in range(3):
        pot[a] = 0.0
        beta[a] = 0.0
        hph[a] = 0.0
        gam[a] = 0.0
        kr3[a] = 0.0
        for u in range(nu):
            dpot[a, u] = 0.0
            dbeta[a, u] = 0.0
            dhph[a, u] = 0.0
            dgam[a, u] = 0.0
        dkr3[a, 0] = 0.0
        dkr3[a, 1] = 0.0
    for c in range(nfull):
        yfull[c] = 0.0
        for u in range(nu):
            dyfull[c, u] = 0.0
    for u in range(nu + 1):
        ktd[u] = 0.0

    # porosity and fluid porosity
    phi, dphi_p, dphi_t = porosity(
        phi_ref_c, rockp[RK_CPOR], rockp[RK_CTPOR], rockp[RK_CPTPOR],
        rockp[RK_PREF], rockp[RK_TREF], rockp[RK_MODE] != 0.0, p, t,
    )
    rho_coke = rockp[RK_RHO_COKE]
    if rho_coke > 0.0 and math.isfinite(rho_coke):
        phif = phi - cc / rho_coke
        dphif_cc = -1.0 / rho_coke
    else:
        phif = phi
        dphif_cc = 0.0
    if phif <= 0.0:
        return False, phif

    t_ref = rockp[RK_TREF]
    eps_per = rockp[RK_EPS_PER]

    # --- water phase ---------------------------------------------------
    rw, drw_p, drw_t = liquid_density(
        liq[0, LIQ_RHO_REF], liq[0, LIQ_CP], liq[0, LIQ_CT1],
        liq[0, LIQ_CT2], liq[0, LIQ_CPT], rockp[RK_PREF], t_ref, p, t,
    )
    muw, dmuw_t = liquid_viscosity(liq[0, LIQ_AVISC], liq[0, LIQ_BVISC], t)
    hgw, dhgw_t = gas_enthalpy(
        gasp[0, GASP_CPG1], gasp[0, GASP_CPG2],
        gasp[0, GASP_CPG3], gasp[0, GASP_CPG4], t_ref, t,
    )
    hvw, dhvw_t = vaporization_enthalpy(
        liq[0, LIQ_HVR], liq[0, LIQ_EV], liq[0, LIQ_TCRIT_F], t,
    )
    hw = hgw - hvw
    dhw_t = dhgw_t - dhvw_t
    uw = hw - p / rw
    duw_p = -1.0 / rw + p * drw_p / (rw * rw)
    duw_t = dhw_t + p * drw_t / (rw * rw)

    # --- oil phase -----------------------------------------------------
    rho_i = np.empty(nco)
    drho_i_p = np.empty(nco)
    drho_i_t = np.empty(nco)
    mu_i = np.empty(nco)
    dmu_i_t = np.empty(nco)
    hli = np.empty(nco)
    dhli_t = np.empty(nco)
    for i in range(nco):
        r = i + 1
        rho_i[i], drho_i_p[i], drho_i_t[i] = liquid_density(
            liq[r, LIQ_RHO_REF], liq[r, LIQ_CP], liq[r, LIQ_CT1],
            liq[r, LIQ_CT2], liq[r, LIQ_CPT], rockp[RK_PREF], t_ref, p, t,
        )
        mu_i[i], dmu_i_t[i] = liquid_viscosity(
            liq[r, LIQ_AVISC], liq[r, LIQ_BVISC], t,
        )
        hg_i, dhg_i = gas_enthalpy(
            gasp[r, GASP_CPG1], gasp[r, GASP_CPG2],
            gasp[r, GASP_CPG3], gasp[r, GASP_CPG4], t_ref, t,
        )
        hv_i, dhv_i = vaporization_enthalpy(
            liq[r, LIQ_HVR], liq[r, LIQ_EV], liq[r, LIQ_TCRIT_F], t,
        )
        hli[i] = hg_i - hv_i
        dhli_t[i] = dhg_i - dhv_i

    inv_ro = 0.0
    dinv_p = 0.0
    dinv_t = 0.0
    for i in range(nco):
        inv_ro += x[i] / rho_i[i]
        dinv_p -= x[i] * drho_i_p[i] / (rho_i[i] * rho_i[i])
        dinv_t -= x[i] * drho_i_t[i] / (rho_i[i] * rho_i[i])
    if inv_ro < 1e-12:
        inv_ro = 1e-12
        dinv_p = 0.0
        dinv_t = 0.0
    ro = 1.0 / inv_ro
    ro2 = ro * ro
    dro_p = -ro2 * dinv_p
    dro_t = -ro2 * dinv_t
    # dro/dx_i = -ro² / rho_i

    lnmu = 0.0
    dlnmu_t = 0.0
    for i in range(nco):
        lnmu += x[i] * math.log(mu_i[i])
        dlnmu_t += x[i] * dmu_i_t[i] / mu_i[i]
    muo = math.exp(lnmu)
    dmuo_t = muo * dlnmu_t
    # dmuo/dx_i = muo·ln(mu_i)

    ho = 0.0
    dho_t = 0.0
    for i in range(nco):
        ho += x[i] * hli[i]
        dho_t += x[i] * dhli_t[i]
    uo = ho - p / ro
    duo_p = -1.0 / ro + p * dro_p / ro2
    duo_t = dho_t + p * dro_t / ro2

    # --- equilibrium ratios and the full gas composition ----------------
    kw, dkw_p, dkw_t = k_value(
        kv[0, 0], kv[0, 1], kv[0, 2], kv[0, 3], kv[0, 4], p, t,
    )
    fw, dfw_s = per_factor(sw, eps_per)
    yfull[0] = fw * kw
    dyfull[0, 0] = fw * dkw_p
    dyfull[0, ct] = fw * dkw_t
    dyfull[0, csw] = dfw_s * kw

    fo_h, dfo_h = per_factor(so, eps_per)
    for i in range(nco):
        ki, dki_p, dki_t = k_value(
            kv[1 + i, 0], kv[1 + i, 1], kv[1 + i, 2],
            kv[1 + i, 3], kv[1 + i, 4], p, t,
        )
        c = 1 + i
        if i == heavy:
            yfull[c] = fo_h * ki * x[i]
            dyfull[c, 0] = fo_h * dki_p * x[i]
            dyfull[c, ct] = fo_h * dki_t * x[i]
            dyfull[c, 1 + i] = fo_h * ki
            dyfull[c, csw] = -dfo_h * ki * x[i]
            dyfull[c, csg] = -dfo_h * ki * x[i]
        else:
            yfull[c] = ki * x[i]
            dyfull[c, 0] = dki_p * x[i]
            dyfull[c, ct] = dki_t * x[i]
            dyfull[c, 1 + i] = ki
    for j in range(ncg):
        c = 1 + nco + j
        yfull[c] = y[j]
        dyfull[c, 1 + nco + j] = 1.0

    # --- gas phase -----------------------------------------------------
    tcr = np.empty(nfull)
    pcr = np.empty(nfull)
    for c in range(nfull):
        tcr[c] = gasp[c, GASP_TCR]
        pcr[c] = gasp[c, GASP_PC]
    dzdw = np.empty(nfull)
    z, dz_p, dz_t = z_factor_mix(yfull, tcr, pcr, p, t, dzdw)
    dz = np.zeros(nu)
    dz[0] = dz_p
    dz[ct] += dz_t
    for c in range(nfull):
        if dzdw[c] != 0.0:
            for u in range(nu):
                dz[u] += dzdw[c] * dyfull[c, u]

    tr = t + RANKINE_OFFSET
    rg = p / (z * R_GAS_DENSITY * tr)
    drg = np.empty(nu)
    for u in range(nu):
        drg[u] = -rg * dz[u] / z
    drg[0] += rg / p
    drg[ct] -= rg / tr

    mgbar = 0.0
    dmg = np.zeros(nu)
    for c in range(nfull):
        mgbar += yfull[c] * gasp[c, GASP_M]
        for u in range(nu):
            dmg[u] += gasp[c, GASP_M] * dyfull[c, u]

    # gas viscosity: sqrt-molar-mass weighted mix of component power laws
    wsum = 0.0
    musum = 0.0
    dmusum_t = 0.0
    sqm = np.empty(nfull)
    muc = np.empty(nfull)
    for c in range(nfull):
        sqm[c] = math.sqrt(gasp[c, GASP_M])
        m_c, dm_c = gas_component_viscosity(
            gasp[c, GASP_AVG], gasp[c, GASP_BVG], t,
        )
        muc[c] = m_c
        wsum += yfull[c] * sqm[c]
        musum += yfull[c] * m_c * sqm[c]
        dmusum_t += yfull[c] * dm_c * sqm[c]
    dmug = np.zeros(nu)
    if wsum > 1e-30:
        mug = musum / wsum
        dmug[ct] += dmusum_t / wsum
        for c in range(nfull):
            dmy = sqm[c] * (muc[c] - mug) / wsum
            if dmy != 0.0:
                for u in range(nu):
                    dmug[u] += dmy * dyfull[c, u]
    else:
        mug = 1.0

    hg = 0.0
    dhg = np.zeros(nu)
    for c in range(nfull):
        h_c, dh_c = gas_enthalpy(
            gasp[c, GASP_CPG1], gasp[c, GASP_CPG2],
            gasp[c, GASP_CPG3], gasp[c, GASP_CPG4], t_ref, t,
        )
        hg += yfull[c] * h_c
        dhg[ct] += yfull[c] * dh_c
        if h_c != 0.0:
            for u in range(nu):
                dhg[u] += h_c * dyfull[c, u]
    ug = hg - p / rg
    dug = np.empty(nu)
    for u in range(nu):
        dug[u] = dhg[u] + p * drg[u] / (rg * rg)
    dug[0] -= 1.0 / rg

    # --- relative permeability and capillary pressure --------------------
    krw, dkrw = interp1(swt_s, swt_krw, sw)
    krow, dkrow = interp1(swt_s, swt_krow, sw)
    pcow, dpcow = interp1(swt_s, swt_pcow, sw)
    krg, dkrg = interp1(slt_s, slt_krg, sg)
    krog, dkrog = interp1(slt_s, slt_krog, sg)
    pcog, dpcog = interp1(slt_s, slt_pcog, sg)
    kro, d_row, d_rw, d_rog, d_rg = stone2(
        rockp[RK_KROCW], krow, krw, krog, krg,
    )
    dkro_sw = d_row * dkrow + d_rw * dkrw
    dkro_sg = d_rog * dkrog + d_rg * dkrg

    kr3[0] = krw
    kr3[1] = kro
    kr3[2] = krg
    dkr3[0, 0] = dkrw
    dkr3[1, 0] = dkro_sw
    dkr3[1, 1] = dkro_sg
    dkr3[2, 1] = dkrg
    pcv[0] = pcow
    pcv[1] = pcog
    dpcv[0] = dpcow
    dpcv[1] = dpcog

    # --- specific weights (psi/ft) ---------------------------------------
    m_w = gasp[0, GASP_M]
    gam[0] = rw * m_w * PSI_PER_FT
    dgam[0, 0] = drw_p * m_w * PSI_PER_FT
    dgam[0, ct] = drw_t * m_w * PSI_PER_FT

    mobar = 0.0
    for i in range(nco):
        mobar += x[i] * gasp[1 + i, GASP_M]
    gam[1] = ro * mobar * PSI_PER_FT
    dgam[1, 0] = dro_p * mobar * PSI_PER_FT
    dgam[1, ct] = dro_t * mobar * PSI_PER_FT
    for i in range(nco):
        dro_xi = -ro2 / rho_i[i]
        dgam[1, 1 + i] = (dro_xi * mobar + ro * gasp[1 + i, GASP_M]) * PSI_PER_FT

    for u in range(nu):
        dgam[2, u] = (drg[u] * mgbar + rg * dmg[u]) * PSI_PER_FT
    gam[2] = rg * mgbar * PSI_PER_FT

    # --- phase potentials (depth factored out; caller multiplies z) -----
    # pot here stores p_alpha; the gravity term gam*z is applied by the
    # connection kernel with each cell's own depth.
    pot[0] = p - pcow
    dpot[0, 0] = 1.0
    dpot[0, csw] = -dpcow
    pot[1] = p
    dpot[1, 0] = 1.0
    pot[2] = p + pcog
    dpot[2, 0] = 1.0
    dpot[2, csg] = dpcog

    # --- phase mobility-density products ---------------------------------
    beta[0] = rw * krw / muw
    if krw > 0.0 or dkrw != 0.0:
        dbeta[0, 0] = drw_p * krw / muw
        dbeta[0, ct] = (drw_t * krw - rw * krw * dmuw_t / muw) / muw
        dbeta[0, csw] = rw * dkrw / muw
    b_o = ro * kro / muo
    beta[1] = b_o
    if kro > 0.0 or dkro_sw != 0.0 or dkro_sg != 0.0:
        dbeta[1, 0] = dro_p * kro / muo
        dbeta[1, ct] = (dro_t * kro - ro * kro * dmuo_t / muo) / muo
        dbeta[1, csw] = ro * dkro_sw / muo
        dbeta[1, csg] = ro * dkro_sg / muo
        for i in range(nco):
            dro_xi = -ro2 / rho_i[i]
            dmuo_xi = muo * math.log(mu_i[i])
            dbeta[1, 1 + i] = (dro_xi * kro - ro * kro * dmuo_xi / muo) / muo
    if krg > 0.0 or dkrg != 0.0:
        for u in range(nu):
            dbeta[2, u] = (drg[u] * krg - rg * krg * dmug[u] / mug) / mug
        dbeta[2, csg] += rg * dkrg / mug
    beta[2] = rg * krg / mug

    # --- phase enthalpies -------------------------------------------------
    hph[0] = hw
    dhph[0, ct] = dhw_t
    hph[1] = ho
    dhph[1, ct] = dho_t
    for i in range(nco):
        dhph[1, 1 + i] = hli[i]
    hph[2] = hg
    for u in range(nu):
        dhph[2, u] = dhg[u]

    # --- thermal conductivity --------------------------------------------
    br = sw * rockp[RK_KTW] + so * rockp[RK_KTO] + sg * rockp[RK_KTG]
    ktd[0] = phif * br + (1.0 - phi) * rockp[RK_KTR] + cc * rockp[RK_KTC]
    ktd[1 + 0] = dphi_p * br - dphi_p * rockp[RK_KTR]
    ktd[1 + ct] = dphi_t * br - dphi_t * rockp[RK_KTR]
    ktd[1 + csw] = phif * (rockp[RK_KTW] - rockp[RK_KTO])
    ktd[1 + csg] = phif * (rockp[RK_KTG] - rockp[RK_KTO])
    ktd[1 + ccc] = dphif_cc * br + rockp[RK_KTC]

    # --- accumulation ------------------------------------------------------
    # local helper quantities dphif over all unknowns
    # (nonzero at p, T, C_c only)
    mw_g = rg * sg  # gas molar content per fluid pore volume
    # water component
    a_w = rw * sw + mw_g * yfull[0]
    acc[0] = phif * a_w
    for u in range(nu):
        d = (drg[u] * sg * yfull[0] + mw_g * dyfull[0, u])
        if u == 0:
            d += drw_p * sw
        elif u == ct:
            d += drw_t * sw
        elif u == csw:
            d += rw
        if u == csg:
            d += rg * yfull[0]
        dacc[0, u] = phif * d
    dacc[0, 0] += dphi_p * a_w
    dacc[0, ct] += dphi_t * a_w
    dacc[0, ccc] += dphif_cc * a_w

    # oil components
    for i in range(nco):
        c = 1 + i
        a_i = ro * so * x[i] + mw_g * yfull[c]
        acc[c] = phif * a_i
        for u in range(nu):
            d = drg[u] * sg * yfull[c] + mw_g * dyfull[c, u]
            if u == 0:
                d += dro_p * so * x[i]
            elif u == ct:
                d += dro_t * so * x[i]
            elif u == csw or u == csg:
                d += -ro * x[i] + (rg * yfull[c] if u == csg else 0.0)
            if 1 <= u < 1 + nco:
                dro_xi = -ro2 / rho_i[u - 1]
                d += dro_xi * so * x[i]
                if u - 1 == i:
                    d += ro * so
            dacc[c, u] = phif * d
        dacc[c, 0] += dphi_p * a_i
        dacc[c, ct] += dphi_t * a_i
        dacc[c, ccc] += dphif_cc * a_i

    # non-condensable gas components
    for j in range(ncg):
        c = 1 + nco + j
        a_j = mw_g * y[j]
        acc[c] = phif * a_j
        for u in range(nu):
            d = drg[u] * sg * y[j]
            if u == csg:
                d += rg * y[j]
            if u == 1 + nco + j:
                d += mw_g
            dacc[c, u] = phif * d
        dacc[c, 0] += dphi_p * a_j
        dacc[c, ct] += dphi_t * a_j
        dacc[c, ccc] += dphif_cc * a_j

    # energy
    ur, dur_t = rock_internal_energy(rockp[RK_CP1], rockp[RK_CP2], t_ref, t)
    uc = rockp[RK_COKE_CP] * (t - t_ref)
    duc_t = rockp[RK_COKE_CP]
    a_e = rw * sw * uw + ro * so * uo + mw_g * ug
    acc[row_e] = phif * a_e + (1.0 - phi) * ur + cc * uc
    for u in range(nu):
        d = drg[u] * sg * ug + mw_g * dug[u]
        if u == 0:
            d += drw_p * sw * uw + rw * sw * duw_p
            d += dro_p * so * uo + ro * so * duo_p
        elif u == ct:
            d += drw_t * sw * uw + rw * sw * duw_t
            d += dro_t * so * uo + ro * so * duo_t
        elif u == csw:
            d += rw * uw - ro * uo
        if u == csg:
            d += -ro * uo + rg * ug
        if 1 <= u < 1 + nco:
            i = u - 1
            dro_xi = -ro2 / rho_i[i]
            duo_xi = hli[i] + p * dro_xi / ro2
            d += dro_xi * so * uo + ro * so * duo_xi
        dacc[row_e, u] = phif * d
    dacc[row_e, 0] += dphi_p * a_e - dphi_p * ur
    dacc[row_e, ct] += dphi_t * a_e - dphi_t * ur + (1.0 - phi) * dur_t \
        + cc * duc_t
    dacc[row_e, ccc] += dphif_cc * a_e + uc

    # constraints (stored in the acc slots; composed without time scaling)
    sx = 0.0
    for i in range(nco):
        sx += x[i]
        dacc[row_os, 1 + i] = 1.0
    acc[row_os] = sx - 1.0
    sy = 0.0
    for c in range(nfull):
        sy += yfull[c]
        for u in range(nu):
            dacc[row_gs, u] += dyfull[c, u]
    acc[row_gs] = sy - 1.0

    # coke
    acc[row_ck] = cc
    dacc[row_ck, ccc] = 1.0

    # --- reactions --------------------------------------------------------
    # fuel_idx/ox_idx give each reaction's consumed oil (oil-list index)
    # and oxidizer (full-ordering index); -1 marks not-applicable. The
    # reactant factors clamp at zero with zero derivatives.
    nreac = law.shape[0]
    if nreac > 0:
        pg = p + pcog
        ccr = cc if cc > 0.0 else 0.0
        dpp = np.empty(nu)
        dfm = np.empty(nu)
        dr = np.empty(nu)
        for rr in range(nreac):
            oxi = ox_idx[rr]
            for u in range(nu):
                dpp[u] = 0.0
                dfm[u] = 0.0
            pp = 0.0
            if oxi >= 0:
                y_ox = yfull[oxi]
                pp = y_ox * pg
                if pp > 0.0:
                    for u in range(nu):
                        dpp[u] = dyfull[oxi, u] * pg
                    dpp[0] += y_ox
                    dpp[csg] += y_ox * dpcog
                else:
                    pp = 0.0
            fui = fuel_idx[rr]
            fm = 0.0
            if fui >= 0:
                xf = x[fui]
                fm = phif * so * ro * xf
                if fm > 0.0:
                    base = so * ro * xf
                    dfm[0] = dphi_p * base + phif * so * dro_p * xf
                    dfm[ct] = dphi_t * base + phif * so * dro_t * xf
                    dfm[csw] = -phif * ro * xf
                    dfm[csg] = -phif * ro * xf
                    dfm[ccc] = dphif_cc * base
                    for i in range(nco):
                        dro_xi = -ro2 / rho_i[i]
                        dfm[1 + i] = phif * so * dro_xi * xf
                    dfm[1 + fui] += phif * so * ro
                else:
                    fm = 0.0
            r, dr_t, dr_pp, dr_fm, dr_cc = reaction_rate_one(
                law[rr], rcoef[rr, 0], rcoef[rr, 1], t, pp, fm, ccr, ccmax,
            )
            if r == 0.0 and dr_t == 0.0 and dr_pp == 0.0 and dr_fm == 0.0 \
                    and dr_cc == 0.0:
                continue
            for u in range(nu):
                dr[u] = dr_pp * dpp[u] + dr_fm * dfm[u]
            dr[ct] += dr_t
            if dr_cc != 0.0 and cc >= 0.0:
                dr[ccc] += dr_cc
            for c in range(nfull):
                s = nmat[c, rr]
                if s != 0.0:
                    src[c] += s * r
                    for u in range(nu):
                        dsrc[c, u] += s * dr[u]
            s_ck = nmat[nfull, rr]
            if s_ck != 0.0:
                src[row_ck] += s_ck * r
                for u in range(nu):
                    dsrc[row_ck, u] += s_ck * dr[u]
            h_r = rcoef[rr, 2]
            if h_r != 0.0:
                src[row_e] += h_r * r
                for u in range(nu):
                    dsrc[row_e, u] += h_r * dr[u]

    return True, phif


@njit(cache=True, parallel=True)
def cell_pass(
    nco, ncg, heavy,
    p, t, sw, sg, x, y, cc,
    liq, gasp, kv, rockp, phi_ref,
    swt_s, swt_krw, swt_krow, swt_pcow,
    slt_s, slt_krg, slt_krog, slt_pcog,
    law, rcoef, nmat, fuel_idx, ox_idx, ccmax,
    pot, dpot, beta, dbeta, hph, dhph, yfull, dyfull,
    gam, dgam, pcv, dpcv, kr3, dkr3, ktd,
    acc, dacc, src, dsrc, ok,
):
    ncell = p.shape[0]
    for c in prange(ncell):
        good, _ = cell_eval(
            nco, ncg, heavy,
            p[c], t[c], sw[c], sg[c], x[c], y[c], cc[c],
            liq, gasp, kv, rockp, phi_ref[c],
            swt_s, swt_krw, swt_krow, swt_pcow,
            slt_s, slt_krg, slt_krog, slt_pcog,
            law, rcoef, nmat, fuel_idx, ox_idx, ccmax,
            pot[c], dpot[c], beta[c], dbeta[c], hph[c], dhph[c],
            yfull[c], dyfull[c], gam[c], dgam[c], pcv[c], dpcv[c],
            kr3[c], dkr3[c], ktd[c],
            acc[c], dacc[c], src[c], dsrc[c],
        )
        ok[c] = 1 if good else 0


@njit(cache=True)
def conn_eval(
    nco, ncg, gd, td, za, zb, ta, tb,
    potA, dpotA, betaA, dbetaA, hphA, dhphA, yfullA, dyfullA, xA, gamA,
    dgamA, ktA,
    potB, dpotB, betaB, dbetaB, hphB, dhphB, yfullB, dyfullB, xB, gamB,
    dgamB, ktB,
    upw, freeze,
    flux, dfa, dfb,
):
    """Face flux vector (rows of cell a; negate for b) plus both blocks.

    gd is the Darcy geometric factor with the unit constant folded in
    (flux = gd·beta·ΔΦ in lbmol/day); td is the thermal factor (A/h, ft).
    The phase potential Φ = p_alpha − γ_alpha·z is formed here from each
    side's phase pressure and specific weight with its own depth.

    upw holds one upstream flag per phase (1 = side a).  With freeze
    False the flag is chosen from the potential difference and stored;
    with freeze True the stored flag is used unchanged, which keeps the
    flux smooth across iterations when a potential difference sits at
    zero (late Newton iterations pin the flow direction instead of
    bouncing across the kink).
    """
    nfull = 1 + nco + ncg
    nu = nco + ncg + 5
    ct = 1 + nco + ncg
    row_e = ct

    for r in range(nu):
        flux[r] = 0.0
        for u in range(nu):
            dfa[r, u] = 0.0
            dfb[r, u] = 0.0

    for alpha in range(3):
        phi_a = potA[alpha] - gamA[alpha] * za
        phi_b = potB[alpha] - gamB[alpha] * zb
        dphi = phi_a - phi_b
        if freeze:
            up_a = upw[alpha] == 1
        else:
            up_a = dphi >= 0.0
            upw[alpha] = 1 if up_a else 0
        if up_a:
            b_up = betaA[alpha]
        else:
            b_up = betaB[alpha]
        conv = gd * dphi

        # component weights of this phase
        if alpha == 0:
            ncomp = 1
        elif alpha == 1:
            ncomp = nco
        else:
            ncomp = nfull

        for m in range(ncomp):
            if alpha == 0:
                row = 0
                w_up = 1.0
            elif alpha == 1:
                row = 1 + m
                w_up = xA[m] if up_a else xB[m]
            else:
                row = m
                w_up = yfullA[m] if up_a else yfullB[m]
            val = b_up * w_up
            f = conv * val
            flux[row] += f
            # potential-difference part
            if val != 0.0:
                for u in range(nu):
                    dfa[row, u] += gd * val * (dpotA[alpha, u]
                                               - za * dgamA[alpha, u])
                    dfb[row, u] -= gd * val * (dpotB[alpha, u]
                                               - zb * dgamB[alpha, u])
            # upstream factor part
            if up_a:
                for u in range(nu):
                    dv = dbetaA[alpha, u] * w_up
                    if alpha == 1 and u == 1 + m:
                        dv += betaA[alpha]
                    elif alpha == 2:
                        dv += betaA[alpha] * dyfullA[m, u]
                    if dv != 0.0:
                        dfa[row, u] += conv * dv
            else:
                for u in range(nu):
                    dv = dbetaB[alpha, u] * w_up
                    if alpha == 1 and u == 1 + m:
                        dv += betaB[alpha]
                    elif alpha == 2:
                        dv += betaB[alpha] * dyfullB[m, u]
                    if dv != 0.0:
                        dfb[row, u] += conv * dv

        # energy convection
        h_up = hphA[alpha] if up_a else hphB[alpha]
        val = b_up * h_up
        flux[row_e] += conv * val
        if val != 0.0:
            for u in range(nu):
                dfa[row_e, u] += gd * val * (dpotA[alpha, u]
                                             - za * dgamA[alpha, u])
                dfb[row_e, u] -= gd * val * (dpotB[alpha, u]
                                             - zb * dgamB[alpha, u])
        if up_a:
            for u in range(nu):
                dv = dbetaA[alpha, u] * h_up + betaA[alpha] * dhphA[alpha, u]
                if dv != 0.0:
                    dfa[row_e, u] += conv * dv
        else:
            for u in range(nu):
                dv = dbetaB[alpha, u] * h_up + betaB[alpha] * dhphB[alpha, u]
                if dv != 0.0:
                    dfb[row_e, u] += conv * dv

    # conduction
    hm, dh_a, dh_b = harmonic_pair(ktA[0], ktB[0])
    if hm > 0.0 or dh_a != 0.0 or dh_b != 0.0:
        dt_ab = ta - tb
        flux[row_e] += td * hm * dt_ab
        dfa[row_e, ct] += td * hm
        dfb[row_e, ct] -= td * hm
        if dt_ab != 0.0:
            for u in range(nu):
                dfa[row_e, u] += td * dt_ab * dh_a * ktA[1 + u]
                dfb[row_e, u] += td * dt_ab * dh_b * ktB[1 + u]


@njit(cache=True, parallel=True)
def conn_pass(
    nco, ncg, conn_a, conn_b, gd, td, depth, t_state, x_state,
    pot, dpot, beta, dbeta, hph, dhph, yfull, dyfull, gam, dgam, ktd,
    upw, freeze,
    flux, dfa, dfb,
):
    nconn = conn_a.shape[0]
    for ic in prange(nconn):
        a = conn_a[ic]
        b = conn_b[ic]
        conn_eval(
            nco, ncg, gd[ic], td[ic], depth[a], depth[b],
            t_state[a], t_state[b],
            pot[a], dpot[a], beta[a], dbeta[a], hph[a], dhph[a],
            yfull[a], dyfull[a], x_state[a], gam[a], dgam[a], ktd[a],
            pot[b], dpot[b], beta[b], dbeta[b], hph[b], dhph[b],
            yfull[b], dyfull[b], x_state[b], gam[b], dgam[b], ktd[b],
            upw[ic], freeze,
            flux[ic], dfa[ic], dfb[ic],
        )


@njit(cache=True, parallel=True)
def compose_pass(
    nco, ncg, resid, diag, acc, dacc, src, dsrc, accn, vol, dt,
    t_state, hl_area, hl_kob, hl_d, hl_rho, hl_tini,
):
    """Cell-local residual rows and diagonal blocks (before flux gather)."""
    ncell = resid.shape[0]
    nu = nco + ncg + 5
    row_e = 1 + nco + ncg
    row_os = row_e + 1
    row_gs = row_e + 2
    for c in prange(ncell):
        vdt = vol[c] / dt
        for r in range(nu):
            if r == row_os or r == row_gs:
                resid[c, r] = acc[c, r]
                for u in range(nu):
                    diag[c, r, u] = dacc[c, r, u]
            else:
                resid[c, r] = vdt * (acc[c, r] - accn[c, r]) \
                    - vol[c] * src[c, r]
                for u in range(nu):
                    diag[c, r, u] = vdt * dacc[c, r, u] \
                        - vol[c] * dsrc[c, r, u]
        if hl_area[c] > 0.0:
            resid[c, row_e] += hl_area[c] * hl_kob * (
                (t_state[c] - hl_tini) / hl_d - hl_rho
            )
            diag[c, row_e, row_e] += hl_area[c] * hl_kob / hl_d


@njit(cache=True, parallel=True)
def gather_pass(
    ptr, ids, sides, flux, dfa, dfb, resid, diag, offd,
):
    """Add flux contributions to owning rows; fill off-diagonal blocks.

    Each cell gathers its adjacent connections in a fixed order, so sums
    are bitwise reproducible for any thread count. offd[ic,0] holds
    ∂R_a/∂u_b, offd[ic,1] holds ∂R_b/∂u_a.
    """
    ncell = resid.shape[0]
    nu = resid.shape[1]
    for c in prange(ncell):
        for n in range(ptr[c], ptr[c + 1]):
            ic = ids[n]
            if sides[n] == 0:
                for r in range(nu):
                    resid[c, r] += flux[ic, r]
                    for u in range(nu):
                        diag[c, r, u] += dfa[ic, r, u]
                        offd[ic, 0, r, u] = dfb[ic, r, u]
            else:
                for r in range(nu):
                    resid[c, r] -= flux[ic, r]
                    for u in range(nu):
                        diag[c, r, u] -= dfb[ic, r, u]
                        offd[ic, 1, r, u] = -dfa[ic, r, u]
