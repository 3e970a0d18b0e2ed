#!/usr/bin/env python3
"""Independent scalar oracles for the property-correlation goldens.

Run directly to print the dictionary frozen into tests/goldens.py.
Only the standard library is used: direct formula evaluation,
sampling-plus-bisection root isolation for the compressibility cubic,
and adaptive Simpson quadrature for the enthalpy integrals. No
simulator code is imported, so these values are an independent route
to the same contracts the library implements.

Deck constants are typed in literally from decks/tube.deck and
decks/field.deck.
"""

import math

R_GAS = 10.7316           # psi ft3 / (lbmol R)
R_ARRHENIUS = 1.9859      # Btu / (lbmol R)
RANKINE = 459.67
P_REF = 14.7
T_REF = 77.0
SCF_PER_LBMOL = 379.3     # ft3 per lbmol at standard conditions


# -- direct formula routes --------------------------------------------------

def k_value(kv1, kv2, kv3, kv4, kv5, p, t):
    """K = (kv1/p + kv2 p + kv3) exp(kv4/(T - kv5)), T in degF."""
    return (kv1 / p + kv2 * p + kv3) * math.exp(kv4 / (t - kv5))


def liquid_density(rho_ref, cp, ct1, ct2, cpt, p, t):
    ex = (cp * (p - P_REF) - ct1 * (t - T_REF)
          - 0.5 * ct2 * (t - T_REF) ** 2
          + cpt * (p - P_REF) * (t - T_REF))
    return rho_ref * math.exp(ex)


def liquid_viscosity(avisc, bvisc, t):
    return avisc * math.exp(bvisc / (t + RANKINE))


def gas_component_viscosity(avg, bvg, t):
    return avg * (t + RANKINE) ** bvg


def gas_mix_viscosity(mus, ys, ms):
    num = sum(mu * y * math.sqrt(m) for mu, y, m in zip(mus, ys, ms))
    den = sum(y * math.sqrt(m) for y, m in zip(ys, ms))
    return num / den


def vaporization_enthalpy(hvr, ev, tcrit, t):
    return hvr * (tcrit - t) ** ev if t < tcrit else 0.0


def arrhenius(a, ea, t):
    return a * math.exp(-ea / (R_ARRHENIUS * (t + RANKINE)))


def stone2(krocw, krow, krw, krg, krog):
    val = krocw * ((krow / krocw + krw) * (krog / krocw + krg)
                   - (krw + krg))
    return max(val, 0.0)


def peaceman_re(dx, dy, kx, ky):
    rt = math.sqrt(ky / kx)
    return (0.28 * math.sqrt(rt * dx * dx + dy * dy / rt)
            / (rt ** 0.5 + (1.0 / rt) ** 0.5))


def well_index(dx, dy, h3, k11, k22, rw, skin):
    re = peaceman_re(dx, dy, k11, k22)
    return 2.0 * math.pi * h3 * math.sqrt(k11 * k22) / (
        math.log(re / rw) + skin)


def gas_rate_to_molar(rate_scf_per_hr):
    return rate_scf_per_hr * 24.0 / SCF_PER_LBMOL


# -- cubic root by sampling + bisection -------------------------------------

def z_factor(ys, tcrits_f, pcrits, p, t_f):
    """Largest real root of the RK cubic, isolated by bisection."""
    t = t_f + RANKINE
    a = sum(y * (tc + RANKINE) * math.sqrt((tc + RANKINE) / pc)
            for y, tc, pc in zip(ys, tcrits_f, pcrits))
    b = sum(y * (tc + RANKINE) / pc
            for y, tc, pc in zip(ys, tcrits_f, pcrits))
    tc_mix = math.sqrt(a * a / b)
    pc_mix = tc_mix / b
    big_a = 0.427480 * (p / pc_mix) * (tc_mix / t) ** 2.5
    big_b = 0.086640 * (p / pc_mix) * (tc_mix / t)

    def f(z):
        return ((z - 1.0) * z * z + (big_a - big_b - big_b * big_b) * z
                - big_a * big_b)

    n = 200000
    roots = []
    lo = 1e-12
    flo = f(lo)
    for i in range(1, n + 1):
        hi = 2.0 * i / n
        fhi = f(hi)
        if flo == 0.0:
            roots.append(lo)
        elif flo * fhi < 0.0:
            x0, x1 = lo, hi
            for _ in range(200):
                mid = 0.5 * (x0 + x1)
                fm = f(mid)
                if fm == 0.0:
                    x0 = x1 = mid
                    break
                if f(x0) * fm < 0.0:
                    x1 = mid
                else:
                    x0 = mid
            roots.append(0.5 * (x0 + x1))
        lo, flo = hi, fhi
    if not roots:
        raise AssertionError("no real root in (0, 2)")
    z = max(roots)
    assert abs(f(z)) < 1e-10, f"cubic residual {f(z):g}"
    return z


def gas_density(p, t_f, z):
    return p / (z * R_GAS * (t_f + RANKINE))


# -- adaptive Simpson quadrature --------------------------------------------

def _simpson(f, a, b, fa, fm, fb):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(f, a, m, fa, flm, fm)
    right = _simpson(f, m, b, fm, frm, fb)
    if depth <= 0 or abs(left + right - whole) < 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return (_adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + _adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1))


def quad(f, a, b, tol=1e-13):
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(f, a, b, fa, fm, fb)
    scale = max(1.0, abs(whole))
    return _adaptive(f, a, b, fa, fm, fb, whole, tol * scale, 60)


def gas_enthalpy_quad(c1, c2, c3, c4, t):
    """Integral of the cp polynomial from T_REF to t, by quadrature."""
    def cp(u):
        return c1 + c2 * u + c3 * u * u + c4 * u * u * u

    return quad(cp, T_REF, t)


# -- deck constants ----------------------------------------------------------

TUBE_KV = {
    "H2O": (1.7202e6, 0.0, 0.0, -6869.59, -376.64),
    "LO": (1.4546e5, 0.0, 0.0, -4458.73, -387.78),
    "HO": (2.7454e5, 0.0, 0.0, -8424.83, -205.69),
}
TUBE_CPG = {
    "H2O": (7.613, 8.616e-4, 0.0, 0.0),
    "LO": (-1.89, 0.1275, -3.9e-5, 4.6e-9),
    "HO": (-8.14, 0.549, -1.68e-4, 1.98e-8),
    "O2": (6.713, -4.883e-7, 1.287e-6, -4.36e-10),
    "IR": (7.44, -0.0018, 1.975e-6, -4.78e-10),
}
TUBE_HVAP = {"H2O": (1657.0, 0.38), "LO": (1917.0, 0.38),
             "HO": (12198.0, 0.38)}
TUBE_TCRIT = {"H2O": 705.7, "LO": 651.7, "HO": 1138.0, "O2": -181.0,
              "IR": -232.0}
TUBE_PCRIT = {"H2O": 3155.0, "LO": 305.7, "HO": 120.0, "O2": 730.0,
              "IR": 500.0}
TUBE_M = {"H2O": 18.0, "LO": 156.7, "HO": 675.0, "O2": 32.0, "IR": 40.8}
TUBE_GASVISC = {
    "H2O": (8.822e-6, 1.116),
    "LO": (2.166e-6, 0.943),
    "HO": (3.926e-6, 1.102),
    "O2": (2.196e-4, 0.721),
    "IR": (2.127e-4, 0.702),
}

MIX_ORDER = ("H2O", "LO", "HO", "O2", "IR")
MIX_Y = (0.05, 0.02, 0.01, 0.20, 0.72)


def build():
    g = {}
    g["k_w_2014_100"] = k_value(*TUBE_KV["H2O"], 2014.7, 100.0)
    g["k_lo_500_300"] = k_value(*TUBE_KV["LO"], 500.0, 300.0)
    g["k_ho_500_300"] = k_value(*TUBE_KV["HO"], 500.0, 300.0)
    g["k_allterms_800_250"] = k_value(1e3, 1e-2, 0.5, -4000.0, -300.0,
                                      800.0, 250.0)

    g["z_o2_65_200"] = z_factor((1.0,), (-181.77,), (730.0,), 65.0, 200.0)
    z_tube = z_factor((0.21, 0.79),
                      (TUBE_TCRIT["O2"], TUBE_TCRIT["IR"]),
                      (TUBE_PCRIT["O2"], TUBE_PCRIT["IR"]),
                      2014.7, 100.0)
    g["z_tubegas_2014_100"] = z_tube
    g["rho_g_tube_init"] = gas_density(2014.7, 100.0, z_tube)

    g["rho_w_tube_2514_150"] = liquid_density(
        3.466, 3e-6, 1.2e-4, 0.0, 0.0, 2514.7, 150.0)
    rho_lo = liquid_density(0.3195, 5e-6, 2.839e-4, 0.0, 0.0,
                            2014.7, 100.0)
    rho_ho = liquid_density(0.0914, 5e-6, 1.496e-4, 0.0, 0.0,
                            2014.7, 100.0)
    g["rho_lo_tube_init"] = rho_lo
    g["rho_ho_tube_init"] = rho_ho
    g["rho_o_tube_init"] = 1.0 / (0.744 / rho_lo + 0.256 / rho_ho)

    g["mu_w_100"] = liquid_viscosity(4.7352e-3, 2728.2, 100.0)
    mu_lo = liquid_viscosity(4.02e-4, 6121.6, 200.0)
    mu_ho = liquid_viscosity(4.02e-4, 6121.6, 200.0)
    g["mu_o_tube_200"] = mu_lo ** 0.3 * mu_ho ** 0.7
    mus = [gas_component_viscosity(*TUBE_GASVISC[c], 300.0)
           for c in MIX_ORDER]
    g["mu_g_tube_300"] = gas_mix_viscosity(
        mus, MIX_Y, [TUBE_M[c] for c in MIX_ORDER])

    g["h_gw_177"] = gas_enthalpy_quad(*TUBE_CPG["H2O"], 177.0)
    g["h_g_tube_400"] = sum(
        y * gas_enthalpy_quad(*TUBE_CPG[c], 400.0)
        for y, c in zip(MIX_Y, MIX_ORDER))
    h_lo = gas_enthalpy_quad(*TUBE_CPG["LO"], 300.0)
    h_ho = gas_enthalpy_quad(*TUBE_CPG["HO"], 300.0)
    hv_lo = vaporization_enthalpy(*TUBE_HVAP["LO"], TUBE_TCRIT["LO"], 300.0)
    hv_ho = vaporization_enthalpy(*TUBE_HVAP["HO"], TUBE_TCRIT["HO"], 300.0)
    g["hvap_ho_300"] = hv_ho
    g["h_o_tube_300"] = 0.744 * (h_lo - hv_lo) + 0.256 * (h_ho - hv_ho)

    g["u_coke_177"] = 4.06 * (177.0 - 77.0)
    g["u_rock_tube_300"] = 35.0 * (300.0 - 77.0)
    h_w_100 = gas_enthalpy_quad(*TUBE_CPG["H2O"], 100.0) \
        - vaporization_enthalpy(*TUBE_HVAP["H2O"], TUBE_TCRIT["H2O"], 100.0)
    rho_w_100 = liquid_density(3.466, 3e-6, 1.2e-4, 0.0, 0.0,
                               2014.7, 100.0)
    g["u_w_tube_init"] = h_w_100 - 2014.7 / rho_w_100

    ctot = 5e-6 * (2064.7 - P_REF)
    g["phi_tube_linear"] = 0.4142 * (1.0 + ctot)
    g["phi_tube_nonlinear"] = 0.4142 * math.exp(ctot)
    g["phif_tube_linear"] = 0.4142 * (1.0 + ctot) - 0.05 / 57.2

    g["arr_tube_r4_600"] = arrhenius(1.00008e4, 25200.0, 600.0)
    g["arr_tube_r1_500"] = arrhenius(7.248e11, 59450.0, 500.0)

    g["stone2_spec"] = stone2(1.0, 0.5, 0.1, 0.2, 0.4)
    g["re_iso_16_4"] = peaceman_re(16.4, 16.4, 1.0, 1.0)
    g["wi_field_inj"] = well_index(16.4, 16.42857142857143, 7.0,
                                   4000.0, 4000.0, 0.5, 0.0)
    g["molar_rate_tube_inj"] = gas_rate_to_molar(0.554)
    g["molar_rate_field_inj"] = gas_rate_to_molar(115000.0)
    return g


if __name__ == "__main__":
    print('"""Golden values produced by tests/oracles/props_oracle.py."""')
    print()
    print("GOLDENS = {")
    for key, val in build().items():
        print(f"    {key!r}: {val!r},")
    print("}")
