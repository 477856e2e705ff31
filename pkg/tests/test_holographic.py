import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ulafocus import holographic as holo
from ulafocus.array_model import ArrayConfig, DomainError
from ulafocus.local_expansion import QuadricKind, ellipsoid_geometry, quadric_coefficients, structural_sums

# 50-digit quadrature values for L=1, y0=0.3, z0=0.8
CHI_REF = {2: 1.0862320899299839, 3: 1.1798147848227046767, 4: 1.3085441877233322247, 6: 1.6872904287753097977}
CHIBAR_REF = {2: -0.14279954315158946128, 3: -0.11394280071404155114, 4: -0.09188803281444471456,
              5: -0.074868413245961443076}


@pytest.fixture
def hcfg():
    return holo.HolographicConfig(L=1.0, wavelength=0.1, y0=0.3, z0=0.8)


def test_chi_reference_values(hcfg):
    for k, v in CHI_REF.items():
        assert holo.chi(k, hcfg) == pytest.approx(v, rel=1e-13)
    for k, v in CHIBAR_REF.items():
        assert holo.chi_bar(k, hcfg) == pytest.approx(v, rel=1e-13)


def test_chi_order_validation(hcfg):
    with pytest.raises(ValueError):
        holo.chi(5, hcfg)
    with pytest.raises(ValueError):
        holo.chi_bar(1, hcfg)


@pytest.mark.parametrize("theta", [0.0, 0.7, -1.2, 1.5])
def test_series_and_closed_form_agree_at_switch(theta):
    # both branches evaluated on either side of the switch point
    for k in holo.CHI_ORDERS:
        a = holo.scaled_chi(k, holo.RHO_SERIES * (1 - 1e-9), theta)
        b = holo.scaled_chi(k, holo.RHO_SERIES * (1 + 1e-9), theta)
        assert a == pytest.approx(b, rel=1e-8)
    for k in (2, 3, 4, 5):
        a = holo.scaled_chi_bar(k, holo.RHO_SERIES * (1 - 1e-9), theta)
        b = holo.scaled_chi_bar(k, holo.RHO_SERIES * (1 + 1e-9), theta)
        assert a == pytest.approx(b, rel=1e-8, abs=1e-14)


def test_scaled_functions_tend_to_point_source():
    theta = 0.4
    for k in holo.CHI_ORDERS:
        assert holo.scaled_chi(k, 1e-6, theta) == pytest.approx(1.0, abs=1e-10)
    assert holo.scaled_chi_bar(3, 1e-6, theta) == pytest.approx(-math.sin(theta), abs=1e-10)


def test_vectorized_matches_scalar():
    rho = np.array([0.01, 0.3, 0.5, 2.0, 40.0])
    v = holo.scaled_chi(4, rho, 0.9)
    assert v.shape == rho.shape
    np.testing.assert_allclose(v, [holo.scaled_chi(4, r, 0.9) for r in rho])


def test_chi_bar_vanishes_on_broadside():
    cfg = holo.HolographicConfig(L=1.0, wavelength=0.1, y0=0.0, z0=0.6)
    for k in (2, 3, 4, 5):
        assert abs(holo.chi_bar(k, cfg)) < 1e-15


def test_midpoint_arrays_converge_to_chi():
    L, r0 = 1.25, np.array([0.0, 0.5, 1.5])
    hc = holo.HolographicConfig(L, 0.1, 0.5, 1.5)
    errs = []
    for M in (100, 1000, 10000):
        cfg = ArrayConfig(M=M, delta_t=2 * L / (2 * M + 1))
        s = structural_sums(cfg, r0).s
        errs.append(max(abs(s[k] / holo.chi(k, hc) - 1) for k in holo.CHI_ORDERS))
    orders = [math.log10(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) > 1.9
    assert errs[-1] < 1e-8


def test_broadside_gammas_match_general_coefficients():
    cfg = holo.HolographicConfig(L=1.0, wavelength=0.05, y0=0.0, z0=2.0)
    co = holo.holographic_coefficients(cfg)
    g1, g2, g3 = holo.broadside_gammas(1.0, 0.05, 2.0)
    assert co.gamma1 == pytest.approx(g1, rel=1e-12)
    assert co.M2[0, 0] == pytest.approx(g2, rel=1e-12)
    assert co.M2[1, 1] == pytest.approx(g3, rel=1e-12)
    assert abs(co.M2[0, 1]) < 1e-12 * abs(g2)


def test_scaled_coefficients_are_scale_free():
    a = holo.holographic_coefficients(holo.HolographicConfig.from_polar(0.7, 0.3, 12.5, D=1.0))
    b = holo.holographic_coefficients(holo.HolographicConfig.from_polar(0.7, 0.3, 12.5, D=3.0))
    np.testing.assert_allclose(a.M2, 9 * b.M2, rtol=1e-12)
    np.testing.assert_allclose(a.m2, 3 * b.m2, rtol=1e-12)
    g1, m2, M2 = holo.scaled_coefficients(0.7, 0.3, 12.5)
    np.testing.assert_allclose(M2, a.M2, rtol=1e-12)


def test_holographic_quadric_is_close_to_finite_array():
    # midpoint placement: 1001 elements spread over the full 2.5 m aperture
    cfg = ArrayConfig(M=500, delta_t=2.5 / 1001, wavelength=0.1)
    r0 = (0, 0.4, 1.5)
    fin = quadric_coefficients(cfg, r0)
    lim = holo.holographic_coefficients(holo.HolographicConfig(1.25, 0.1, 0.4, 1.5)).as_quadric()
    assert lim.kind is QuadricKind.ELLIPSOID
    assert np.linalg.norm(fin.M2 - lim.M2) / np.linalg.norm(lim.M2) < 1e-5
    geo = ellipsoid_geometry(lim, r0, 0.5)
    assert geo.volume > 0


def test_broadside_lhs_reference_values():
    ref = {0.001: 1849.2139779415899122, 0.05: 37.01656120611948495, 0.3: 6.359069135001405832,
           10: 5.6278200967054250568}
    for rho, v in ref.items():
        assert float(holo.broadside_lhs(rho)) == pytest.approx(v, rel=1e-10)


def test_broadside_lhs_smooth_across_series_switch():
    a = float(holo.broadside_lhs(0.1 * (1 - 1e-12)))
    b = float(holo.broadside_lhs(0.1 * (1 + 1e-12)))
    assert a == pytest.approx(b, rel=1e-9)


def test_broadside_threshold():
    rho, val = holo.broadside_threshold()
    assert rho == pytest.approx(1.72775679365399, abs=1e-6)
    assert val == pytest.approx(2.20479422072786, abs=1e-9)


def test_broadside_asymptotes():
    # 3 sqrt(15) / (2 pi rho) governs rho -> 0, the linear form rho -> inf
    for rho in (1e-3, 1e-4):
        assert float(holo.broadside_lhs(rho) / holo.broadside_asymptote_far(rho)) == pytest.approx(1, abs=1e-3)
    for rho in (1e3, 1e4):
        assert float(holo.broadside_lhs(rho) / holo.broadside_asymptote_near(rho)) == pytest.approx(1, abs=1e-2)
    assert abs(holo.broadside_lhs(1e4) - holo.broadside_asymptote_near(1e4)) < 1.0


def test_broadside_roots():
    assert holo.broadside_roots(2.0) is None
    lo, hi = holo.broadside_roots(12.5)
    assert float(holo.broadside_lhs(lo)) == pytest.approx(12.5, rel=1e-10)
    assert float(holo.broadside_lhs(hi)) == pytest.approx(12.5, rel=1e-10)
    assert lo < 1.72776 < hi


def test_fraunhofer_limits():
    fr, dmax, dmin = holo.fraunhofer_limits(1.25, 0.1)
    assert fr == pytest.approx(125.0)
    assert dmax == pytest.approx(math.pi / (12 * math.sqrt(15)) * fr)
    assert 0 < dmin < 1.25
    assert math.isnan(holo.fraunhofer_limits(0.001, 0.1)[2])


def test_feasibility_below_threshold_is_empty():
    fb = holo.feasibility_boundary(2.0, np.radians(np.linspace(-80, 80, 33)))
    assert fb.empty


def test_feasibility_single_interval_and_mirror():
    thetas = np.radians(np.linspace(-85, 85, 35))
    for ll in (5.0, 12.5, 25.0):
        fb = holo.feasibility_boundary(ll, thetas)
        assert not fb.anomalies
        for a, b in zip(fb.entries, fb.entries[::-1]):
            assert len(a.rho_intervals) == len(b.rho_intervals)
            for (a0, a1), (b0, b1) in zip(a.rho_intervals, b.rho_intervals):
                assert a0 == pytest.approx(b0, rel=1e-12)
                assert a1 == pytest.approx(b1, rel=1e-12)


def test_no_feasibility_near_endfire():
    e = holo.feasible_rho_intervals(math.radians(89), 12.5)
    assert e.rho_intervals == []


def test_no_spurious_far_roots():
    # tiny rho once produced false sign changes through cancellation
    rho = np.geomspace(1e-4, 1e-2, 200)
    for theta in (0.0, 0.7, 1.2):
        assert np.all(holo.scaled_min_eigenvalue(rho, theta, 25.0) < 0)


def test_feasibility_domain_errors():
    with pytest.raises(DomainError):
        holo.feasible_rho_intervals(math.pi / 2, 10.0)
    with pytest.raises(DomainError):
        holo.scaled_coefficients(-1.0, 0.0, 10.0)
    with pytest.raises(DomainError):
        holo.HolographicConfig(L=1.0, wavelength=0.1, y0=0.0, z0=0.0)


@pytest.mark.parametrize("theta", [0.0, 0.5, 1.1])
def test_highdl_series_fourth_order(theta):
    for name, exact in (
        ("D2gamma1", lambda r: holo.scaled_coefficients(r, theta, 12.5)[0]),
        ("D2gamma3", lambda r: np.linalg.eigvalsh(holo.scaled_coefficients(r, theta, 12.5)[2])[0]),
        ("D3chi3", lambda r: holo.scaled_chi(3, r, theta)),
        ("D3chibar3", lambda r: holo.scaled_chi_bar(3, r, theta)),
        ("D2chibar2", lambda r: holo.scaled_chi_bar(2, r, theta)),
    ):
        if theta == 0.0 and "bar" in name:
            continue  # identically zero on broadside
        e = [abs(exact(r) - getattr(holo.highDL_series(theta, r, 12.5), name)) for r in (0.04, 0.02)]
        assert 12 < e[0] / e[1] < 20, name


def test_highdl_matrix_and_vector_series():
    theta = 0.6
    errs = []
    for rho in (0.02, 0.01):
        s = holo.highDL_series(theta, rho, 12.5)
        _, m2, M2 = holo.scaled_coefficients(rho, theta, 12.5)
        mu = 0.5 + float(m2 @ np.linalg.solve(M2, m2))
        errs.append([np.abs(s.D2M2 - M2).max(), np.abs(s.Dm2 - m2).max(), abs(s.mu - mu)])
    ratios = np.array(errs[0]) / np.array(errs[1])
    assert np.all((ratios > 12) & (ratios < 20)), ratios


def test_highdl_mu_limit():
    s = holo.highDL_series(0.3, 1e-9, 12.5, kappa=0.25)
    assert s.mu == pytest.approx(2 / 3 - 0.25, abs=1e-12)


def test_highdl_range_checks():
    with pytest.raises(DomainError):
        holo.highDL_series(0.0, 0.5, 10.0)
    with pytest.warns(UserWarning):
        holo.highDL_series(0.0, 0.4, 10.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        holo.highDL_series(0.0, 0.2, 10.0)


def test_highdl_feasible_flag_matches_bound():
    bound = holo.highdl_max_distance(0.0, 25.0)
    assert holo.highDL_series(0.0, 1 / (0.9 * bound), 25.0).feasible
    assert not holo.highDL_series(0.0, 1 / (1.1 * bound), 25.0).feasible
    assert holo.highdl_max_distance(1.4, 10.0) == 0.0


@settings(max_examples=40, deadline=None)
@given(rho=st.floats(0.01, 50), theta=st.floats(-1.5, 1.5))
def test_holographic_gamma1_positive(rho, theta):
    g1, _, _ = holo.scaled_coefficients(rho, theta, 10.0)
    assert g1 > 0
