"""Golden values produced by tests/oracles/props_oracle.py."""

GOLDENS = {
    'k_w_2014_100': 0.0004699858231931792,
    'k_lo_500_300': 0.44497513372215286,
    'k_ho_500_300': 3.1934479462762356e-05,
    'k_allterms_800_250': 0.0067686069067359475,
    'z_o2_65_200': 0.998889091509918,
    'z_tubegas_2014_100': 0.9946655394399211,
    'rho_g_tube_init': 0.33723823656713364,
    'rho_w_tube_2514_150': 3.4616355901556135,
    'rho_lo_tube_init': 0.3206106869437855,
    'rho_ho_tube_init': 0.0920014813417437,
    'rho_o_tube_init': 0.19595796251761435,
    'mu_w_100': 0.6199769160490034,
    'mu_o_tube_200': 4.309116701701555,
    'mu_g_tube_300': 0.0213067940771022,
    'h_gw_177': 772.2423200000001,
    'h_g_tube_400': 2753.755656248139,
    'hvap_ho_300': 157442.27482818725,
    'h_o_tube_300': -45043.80898626073,
    'u_coke_177': 405.99999999999994,
    'u_rock_tube_300': 7805.0,
    'u_w_tube_init': -19307.703442562757,
    'phi_tube_linear': 0.41844555000000005,
    'phi_tube_nonlinear': 0.41846738297599034,
    'phif_tube_linear': 0.41757142412587417,
    'arr_tube_r4_600': 0.06300778371440344,
    'arr_tube_r1_500': 0.020548940216051324,
    'stone2_spec': 0.06,
    're_iso_16_4': 3.2470343392086267,
    'wi_field_inj': 93991.3010632853,
    'molar_rate_tube_inj': 0.0350540469285526,
    'molar_rate_field_inj': 7276.562088056947,
}
