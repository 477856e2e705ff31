import math

import numpy as np
import pytest

from ulafocus import holographic as holo
from ulafocus.array_model import ArrayConfig, DomainError
from ulafocus.focusing import focus, snr_at
from ulafocus.oracle import (
    cauchy_schwarz_gaps,
    densify,
    fd_derivative_check,
    hausdorff,
    marching_squares,
    random_directions,
    remainder_decay,
    remainder_ratios,
    riemann_chi,
    true_kappa_region,
)


def test_random_directions_are_unit_and_reproducible():
    a = random_directions(5, 3)
    assert np.allclose(np.linalg.norm(a, axis=1), 1)
    assert np.array_equal(a, random_directions(5, 3))


@pytest.mark.parametrize("order", [1, 2])
def test_fd_check_is_second_order(ref_cfg, order):
    rep = fd_derivative_check(ref_cfg, 7, (0.05, 0.4, 1.5), order, seed=2)
    assert rep.max_rel_error < (1e-6 if order == 1 else 1e-4)
    assert rep.order_estimate == pytest.approx(2.0, abs=0.2)
    assert rep.n_cases == 8


def test_fd_check_rejects_bad_input(ref_cfg):
    with pytest.raises(ValueError):
        fd_derivative_check(ref_cfg, 0, (0, 0.4, 1.5), 3)
    p = (0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        fd_derivative_check(ref_cfg, 0, p, 1)


def test_riemann_is_second_order():
    cfg = holo.HolographicConfig.from_polar(0.8, 0.4, 12.5)
    exact = holo.chi(3, cfg)
    e1 = abs(riemann_chi(3, "chi", cfg, 200) - exact)
    e2 = abs(riemann_chi(3, "chi", cfg, 400) - exact)
    assert e1 / e2 == pytest.approx(4.0, rel=0.05)


def test_riemann_chi_bar_vanishes_on_broadside():
    cfg = holo.HolographicConfig(1.0, 0.1, 0.0, 0.7)
    assert abs(riemann_chi(3, "chi_bar", cfg, 1000)) < 1e-14


def test_riemann_rejects_bad_arguments():
    cfg = holo.HolographicConfig(1.0, 0.1, 0.0, 0.7)
    with pytest.raises(ValueError):
        riemann_chi(2, "chi", cfg, 0)
    with pytest.raises(ValueError):
        riemann_chi(2, "psi", cfg, 10)


def test_cauchy_schwarz_gaps_nonnegative(rng):
    for _ in range(50):
        cfg = ArrayConfig(M=int(rng.integers(1, 20)), delta_t=rng.uniform(0.02, 0.2), wavelength=0.1)
        r0 = (0.0, rng.uniform(-2, 2), rng.uniform(0.1, 3))
        for k, l in ((1, 2), (1, 3), (2, 3)):
            g1, g2 = cauchy_schwarz_gaps(cfg, r0, k, l)
            assert g1 >= -1e-14 and g2 >= -1e-14


def test_remainder_zero_step_and_cubic_decay(ref_cfg):
    r0 = np.array([0.0, 0.4, 1.5])
    fa = focus(ref_cfg, r0)
    d = np.array([0.0, 0.6, 0.8])
    seq = remainder_decay(ref_cfg, fa.filt, r0, d, [0.0])
    assert seq == [(0.0, 0.0)]
    D = float(np.linalg.norm(r0))
    seq = remainder_decay(ref_cfg, fa.filt, r0, d, [1e-2 * D / 2**i for i in range(8)])
    assert all(6 <= r <= 10 for r in remainder_ratios(seq)[-3:])


def test_remainder_requires_unit_direction(ref_cfg):
    fa = focus(ref_cfg, (0, 0.4, 1.5))
    with pytest.raises(ValueError):
        remainder_decay(ref_cfg, fa.filt, (0, 0.4, 1.5), (0, 2, 0), [0.1])


def test_marching_squares_circle():
    y = z = np.linspace(-2, 2, 161)
    Y, Z = np.meshgrid(y, z)
    lines = marching_squares(1 - Y**2 - Z**2, y, z)
    assert len(lines) == 1
    pts, closed = lines[0]
    assert closed
    assert np.allclose(np.hypot(pts[:, 0], pts[:, 1]), 1, atol=2e-3)


def test_marching_squares_open_line():
    y = z = np.linspace(-1, 1, 21)
    Y, _ = np.meshgrid(y, z)
    lines = marching_squares(Y - 0.05, y, z)
    assert len(lines) == 1
    pts, closed = lines[0]
    assert not closed
    assert np.allclose(pts[:, 0], 0.05)


@pytest.mark.parametrize("shift, cut_corners", [(0.25, {(1, 0), (0, 1)}), (-0.25, {(0, 0), (1, 1)})])
def test_marching_squares_saddle(shift, cut_corners):
    # corners (y, z) = (0, 0) and (1, 1) above zero, the other two below;
    # the cell mean decides which pair the contour separates
    y = z = np.array([0.0, 1.0])
    V = np.array([[1.0, -1.0], [-1.0, 1.0]]) + shift
    lines = marching_squares(V, y, z)
    assert len(lines) == 2
    corners = np.array([(0, 0), (1, 0), (0, 1), (1, 1)])
    nearest = set()
    for pts, closed in lines:
        assert not closed
        c = corners[np.argmin(np.linalg.norm(corners - pts.mean(axis=0), axis=1))]
        nearest.add(tuple(int(v) for v in c))
    assert nearest == cut_corners


def test_true_region_closed_for_near_target(ref_cfg):
    r0 = np.array([0.0, 0.0, 0.625])
    fa = focus(ref_cfg, r0)
    reg = true_kappa_region(ref_cfg, fa.filt, r0, 0.5, (-0.03, 0.03, 0.5, 0.8), 301)
    assert reg.closed
    assert not reg.coarse
    assert reg.level == pytest.approx(0.5 * snr_at(ref_cfg, fa.filt, r0))
    pts = np.vstack(reg.points)
    vals = [snr_at(ref_cfg, fa.filt, (0.0, y, z)) for y, z in pts[::20]]
    # linear edge interpolation across a curved crest
    assert np.allclose(vals, reg.level, rtol=3e-2)


def test_true_region_shrinks_with_kappa(ref_cfg):
    r0 = np.array([0.0, 0.0, 0.625])
    fa = focus(ref_cfg, r0)
    win = (-0.03, 0.03, 0.5, 0.8)
    a = np.vstack(true_kappa_region(ref_cfg, fa.filt, r0, 0.5, win, 151).points)
    b = np.vstack(true_kappa_region(ref_cfg, fa.filt, r0, 0.9, win, 151).points)
    assert np.ptp(b[:, 1]) < np.ptp(a[:, 1])


def test_true_region_open_beyond_boundary():
    cfg = ArrayConfig.from_aperture(101, 2.5, wavelength=0.1)
    r0 = np.array([0.0, 0.0, 15.0])
    fa = focus(cfg, r0)
    reg = true_kappa_region(cfg, fa.filt, r0, 0.5, (-3, 3, 5, 40), 121)
    assert not reg.closed


def test_true_region_validation(ref_cfg):
    fa = focus(ref_cfg, (0, 0, 1))
    with pytest.raises(ValueError):
        true_kappa_region(ref_cfg, fa.filt, (0, 0, 1), 1.2, (-1, 1, 0.5, 2), 11)
    with pytest.raises(DomainError):
        true_kappa_region(ref_cfg, fa.filt, (0, 0, 1), 0.5, (-1, 1, -0.5, 2), 11)


def test_hausdorff_and_densify():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.0, 1.0], [1.0, 1.0]])
    assert hausdorff(a, b) == pytest.approx(1.0)
    d = densify(a, 0.1)
    assert len(d) == 11
    assert np.max(np.diff(d[:, 0])) <= 0.1 + 1e-12
    assert hausdorff(a, d) == pytest.approx(0.5)
    assert math.isclose(hausdorff(d, d), 0.0, abs_tol=1e-15)
