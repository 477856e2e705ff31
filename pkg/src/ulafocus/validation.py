"""Pairs every closed form with its brute-force oracle and reports pass/fail."""

from __future__ import annotations

import math
from contextlib import ExitStack
from dataclasses import asdict, dataclass
from unittest import mock

import numpy as np

from . import holographic as holo
from .array_model import ArrayConfig
from .focusing import focus
from .local_expansion import quadric_coefficients, structural_sums
from .oracle import (
    cauchy_schwarz_gaps,
    fd_derivative_check,
    random_directions,
    remainder_decay,
    remainder_ratios,
    riemann_chi,
    snr_fd_quadric,
)

MUTATIONS = ("chi4",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<28} measured={self.measured:.6g}  ({self.threshold})"

    def to_dict(self) -> dict:
        return asdict(self)


def reference_array() -> ArrayConfig:
    """101 elements over a 25-wavelength aperture at lambda = 0.1 m."""
    return ArrayConfig.from_aperture(101, 2.5, wavelength=0.1)


def _random_target(rng, L):
    D = rng.uniform(0.3, 3.0) * L
    th = rng.uniform(-1.2, 1.2)
    return np.array([0.0, D * math.sin(th), D * math.cos(th)])


def check_fd(seed: int, n_cases: int = 40) -> list[CheckResult]:
    cfg = reference_array()
    rng = np.random.default_rng(seed)
    g = h = 0.0
    for i in range(n_cases):
        m = int(rng.integers(-cfg.M, cfg.M + 1))
        r0 = _random_target(rng, cfg.half_aperture)
        r0[0] = rng.uniform(-0.2, 0.2)
        d = random_directions(1, seed * 1000 + i)
        g = max(g, fd_derivative_check(cfg, m, r0, 1, d).max_rel_error)
        h = max(h, fd_derivative_check(cfg, m, r0, 2, d).max_rel_error)
    return [
        CheckResult("fd_gradient", g < 1e-6, g, "< 1e-6"),
        CheckResult("fd_hessian", h < 1e-4, h, "< 1e-4"),
    ]


def riemann_sweep(n_points: int, panels: int, L_over_lambda: float = 12.5):
    """Worst relative closed-form vs midpoint-sum error over a (rho, theta) sweep."""
    rhos = np.geomspace(0.05, 5.0, n_points)
    thetas = np.radians(np.linspace(-75, 75, n_points))
    thetas = thetas[np.random.default_rng(0).permutation(n_points)]
    worst = 0.0
    for rho, th in zip(rhos, thetas):
        cfg = holo.HolographicConfig.from_polar(float(rho), float(th), L_over_lambda, D=2.0)
        for k in holo.CHI_ORDERS:
            worst = max(worst, abs(riemann_chi(k, "chi", cfg, panels) / holo.chi(k, cfg) - 1))
        for k in holo.CHI_BAR_ORDERS:
            ref = holo.chi_bar(k, cfg)
            worst = max(worst, abs(riemann_chi(k, "chi_bar", cfg, panels) - ref) / abs(ref))
    return worst


def check_riemann() -> CheckResult:
    worst = riemann_sweep(10, 10**6)
    return CheckResult("riemann_chi", worst < 1e-8, worst, "< 1e-8 relative")


def check_remainder(seed: int, n_dirs: int = 6) -> CheckResult:
    cfg = reference_array()
    r0 = np.array([0.0, 0.4, 1.5])
    fa = focus(cfg, r0)
    D = float(np.linalg.norm(r0))
    ts = [1e-2 * D / 2**i for i in range(10)]
    lo, hi = math.inf, -math.inf
    for d in random_directions(n_dirs, seed):
        r = remainder_ratios(remainder_decay(cfg, fa.filt, r0, d, ts))[-3:]
        lo, hi = min(lo, min(r)), max(hi, max(r))
    ok = 6 <= lo and hi <= 10
    return CheckResult("remainder_order", ok, lo if lo < 6 else hi, "ratios in [6, 10]")


def check_positivity(seed: int, n_cfg: int = 200) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(n_cfg):
        cfg = ArrayConfig(M=int(rng.integers(1, 40)), delta_t=rng.uniform(0.01, 0.2), wavelength=0.1)
        r0 = _random_target(rng, cfg.half_aperture + 0.05)
        q = quadric_coefficients(cfg, r0)
        worst = min(worst, q.gamma1)
        for k, l in ((1, 3), (1, 2), (2, 3)):
            worst = min(worst, *cauchy_schwarz_gaps(cfg, r0, k, l))
    return CheckResult("positivity_chain", worst >= -1e-12, worst, "gamma1 and Cauchy-Schwarz slack >= 0")


def check_convergence() -> CheckResult:
    """Structural sums approach chi with midpoint element placement, order ~2."""
    L, lam = 1.25, 0.1
    r0 = np.array([0.0, 0.5, 1.5])
    errs = []
    for M in (100, 1000):
        cfg = ArrayConfig(M=M, delta_t=2 * L / (2 * M + 1), wavelength=lam)
        s = structural_sums(cfg, r0).s
        # the elements sample [-L, L] at cell midpoints
        hc = holo.HolographicConfig(L, lam, 0.5, 1.5)
        errs.append(max(abs(s[k] / holo.chi(k, hc) - 1) for k in holo.CHI_ORDERS))
    order = math.log10(errs[0] / errs[1])
    return CheckResult("holographic_convergence", order >= 1.9, order, "order >= 1.9")


def check_threshold() -> CheckResult:
    rho, val = holo.broadside_threshold()
    err = max(abs(rho - 1.72776), abs(val - 2.2048))
    return CheckResult("broadside_threshold", err < 1e-3, err, "|rho*-1.72776|, |min-2.2048| < 1e-3")


def check_broadside_consistency() -> CheckResult:
    worst = 0.0
    for ll in (5.0, 12.5, 25.0):
        roots = holo.broadside_roots(ll)
        entry = holo.feasible_rho_intervals(0.0, ll)
        (lo, hi), = entry.rho_intervals
        worst = max(worst, abs(lo / roots[0] - 1), abs(hi / roots[1] - 1))
        # gamma3 sign agrees with the scalar condition on either side of a root
        for rho in (0.5 * roots[0], 2 * roots[0], 0.5 * roots[1], 2 * roots[1]):
            g3 = holo.broadside_gammas(rho, rho / ll, 1.0)[2]
            if (g3 > 0) != (holo.broadside_lhs(rho) < ll):
                worst = math.inf
    return CheckResult("broadside_consistency", worst < 1e-6, worst, "< 1e-6 relative")


def check_mirror() -> CheckResult:
    thetas = np.radians([5.0, 25.0, 55.0, 80.0])
    worst = 0.0
    for t in thetas:
        a = holo.feasible_rho_intervals(float(t), 12.5)
        b = holo.feasible_rho_intervals(float(-t), 12.5)
        if len(a.rho_intervals) != len(b.rho_intervals):
            worst = math.inf
            break
        for (a0, a1), (b0, b1) in zip(a.rho_intervals, b.rho_intervals):
            worst = max(worst, abs(a0 / b0 - 1), abs(a1 / b1 - 1))
    return CheckResult("mirror_symmetry", worst < 1e-9, worst, "< 1e-9 relative")


def quadric_fd_error(cfg: ArrayConfig, r0, step: float = 1e-4) -> float:
    """Worst block-relative mismatch between the quadric and FD of the exact SNR."""
    fa = focus(cfg, r0)
    q = quadric_coefficients(cfg, r0)
    m_fd, M_fd = snr_fd_quadric(cfg, fa.filt, r0, step)
    return max(
        abs(M_fd[0, 0] / q.gamma1 - 1),
        float(np.linalg.norm(m_fd - q.m_vec) / np.linalg.norm(q.m_vec)),
        float(np.linalg.norm(M_fd[1:, 1:] - q.M2) / np.linalg.norm(q.M2)),
        float(np.max(np.abs(M_fd[0, 1:])) / np.linalg.norm(q.M2)),
    )


def check_quadric_fd() -> CheckResult:
    cfg = reference_array()
    L = cfg.half_aperture
    worst = 0.0
    for th in (0.0, math.radians(30)):
        for D in (0.5 * L, 2 * L):
            worst = max(worst, quadric_fd_error(cfg, np.array([0.0, D * math.sin(th), D * math.cos(th)])))
    return CheckResult("quadric_vs_fd", worst < 1e-3, worst, "< 1e-3 relative")


def highdl_ratio(theta: float, L_over_lambda: float, rho: float = 0.1) -> float:
    errs = []
    for r in (rho, rho / 2):
        _, _, M2 = holo.scaled_coefficients(r, theta, L_over_lambda)
        errs.append(abs(np.linalg.eigvalsh(M2)[0] - holo.highDL_series(theta, r, L_over_lambda).D2gamma3))
    return errs[0] / errs[1]


def check_highdl() -> CheckResult:
    ratios = [highdl_ratio(math.radians(t), ll) for t in (0.0, 30.0, 60.0) for ll in (10.0, 25.0)]
    bad = [r for r in ratios if not 10 <= r <= 24]
    return CheckResult("highdl_series_order", not bad, bad[0] if bad else float(np.median(ratios)), "ratio in [10, 24]")


def run_suite(seed: int = 0, mutate: str | None = None) -> list[CheckResult]:
    """Run every oracle pairing; ``mutate`` corrupts a closed form to prove the suite bites."""
    if mutate is not None and mutate not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutate!r}")
    with ExitStack() as stack:
        if mutate == "chi4":
            orig = holo._chi4_closed
            stack.enter_context(mock.patch.object(holo, "_chi4_closed", lambda *a: orig(*a) * (1 + 1e-6)))
        results = check_fd(seed)
        results += [
            check_riemann(),
            check_remainder(seed),
            check_positivity(seed),
            check_convergence(),
            check_threshold(),
            check_broadside_consistency(),
            check_mirror(),
            check_quadric_fd(),
            check_highdl(),
        ]
    return results
