"""Holographic limit of the quadric SNR model (M -> inf, M dT -> L).

Structural sums become aperture averages ``chi_k`` and ``chibar_k``.  With
``rho = L / D`` and the elevation ``theta`` (``y0 = D sin(theta)``,
``z0 = D cos(theta)``), ``D^k chi_k`` depends on ``(rho, theta)`` only, which is
what most routines here work with.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq, minimize_scalar

from .array_model import DomainError
from .local_expansion import QuadricModel, _with_kind

CHI_ORDERS = (2, 3, 4, 6)
CHI_BAR_ORDERS = (2, 3, 5)

# below this rho the Gegenbauer expansion replaces the closed forms
RHO_SERIES = 0.5
_N_SERIES = 140


@dataclass(frozen=True)
class HolographicConfig:
    L: float
    wavelength: float
    y0: float
    z0: float

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("L must be positive")
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")
        if not self.z0 > 0:
            raise DomainError("z0 must be positive")

    @property
    def D(self) -> float:
        return math.hypot(self.y0, self.z0)

    @property
    def rho(self) -> float:
        return self.L / self.D

    @property
    def theta(self) -> float:
        return math.asin(self.y0 / self.D)

    @property
    def L_over_lambda(self) -> float:
        return self.L / self.wavelength

    @classmethod
    def from_polar(cls, rho: float, theta: float, L_over_lambda: float, D: float = 1.0) -> "HolographicConfig":
        L = rho * D
        return cls(L=L, wavelength=L / L_over_lambda, y0=D * math.sin(theta), z0=D * math.cos(theta))


# ---------------------------------------------------------------------------
# chi functions in D = 1 units: aperture [-rho, rho], target (sin t, cos t)


def _gegenbauer(alpha: float, x, nmax: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    C = np.empty((nmax + 1,) + x.shape)
    C[0] = 1.0
    if nmax >= 1:
        C[1] = 2 * alpha * x
    for n in range(2, nmax + 1):
        C[n] = (2 * x * (n + alpha - 1) * C[n - 1] - (n + 2 * alpha - 2) * C[n - 2]) / n
    return C


@lru_cache(maxsize=256)
def _series_coeffs(k: int, s: float, bar: bool) -> np.ndarray:
    """Coefficients in x = rho^2 of the aperture-averaged Gegenbauer expansion."""
    j = np.arange(_N_SERIES // 2 + 1)
    if not bar:
        # (1 - 2ts + t^2)^(-k/2) = sum C_n^(k/2)(s) t^n, averaged over t in [-rho, rho]
        C = _gegenbauer(k / 2, s, _N_SERIES)
        return C[2 * j] / (2 * j + 1)
    # kernel (t - s)(1 - 2ts + t^2)^(-(k+1)/2)
    C = _gegenbauer((k + 1) / 2, s, _N_SERIES)
    odd = np.concatenate([[0.0], C[2 * j[1:] - 1]])
    return (odd - s * C[2 * j]) / (2 * j + 1)


def _chi_series(k: int, rho, s: float):
    return P.polyval(np.asarray(rho, dtype=float) ** 2, _series_coeffs(k, float(s), False))


def _chi_bar_series(k: int, rho, s: float):
    return P.polyval(np.asarray(rho, dtype=float) ** 2, _series_coeffs(k, float(s), True))


def _chi2_closed(L, y0, z0):
    return (np.arctan((L - y0) / z0) + np.arctan((L + y0) / z0)) / (2 * L * z0)


def _chi3_closed(L, y0, z0):
    a, b = L - y0, L + y0
    return (a / np.sqrt(a * a + z0 * z0) + b / np.sqrt(b * b + z0 * z0)) / (2 * L * z0**2)


def _chi4_closed(L, y0, z0):
    a, b = L - y0, L + y0
    head = (a / (a * a + z0 * z0) + b / (b * b + z0 * z0)) / (4 * L * z0**2)
    return head + _chi2_closed(L, y0, z0) / (2 * z0**2)


def _chi6_closed(L, y0, z0):
    a, b = L - y0, L + y0
    head = -(a**3 / (a * a + z0 * z0) ** 2 + b**3 / (b * b + z0 * z0) ** 2) / (8 * L * z0**4)
    return head + 5 * _chi4_closed(L, y0, z0) / (4 * z0**2) - _chi2_closed(L, y0, z0) / (4 * z0**4)


_CLOSED = {2: "_chi2_closed", 3: "_chi3_closed", 4: "_chi4_closed", 6: "_chi6_closed"}


def _chi_bar_closed(k, L, y0, z0):
    e = -(k - 1) / 2
    return (((L + y0) ** 2 + z0**2) ** e - ((L - y0) ** 2 + z0**2) ** e) / (2 * L * (k - 1))


def scaled_chi(k: int, rho, theta):
    """D^k chi_k as a function of (rho, theta); vectorized over rho."""
    if k not in CHI_ORDERS:
        raise ValueError(f"chi_k only defined here for k in {CHI_ORDERS}")
    rho = np.asarray(rho, dtype=float)
    s, c = math.sin(theta), math.cos(theta)
    closed = globals()[_CLOSED[k]]
    with np.errstate(all="ignore"):
        direct = closed(rho, s, c)
    small = rho < RHO_SERIES
    if np.any(small):
        direct = np.array(direct, dtype=float)
        direct[small] = _chi_series(k, rho[small], s)
    return direct[()] if direct.ndim == 0 else direct


def scaled_chi_bar(k: int, rho, theta):
    """D^k chibar_k as a function of (rho, theta); vectorized over rho."""
    if int(k) != k or k < 2:
        raise ValueError("chibar_k requires an integer k >= 2")
    rho = np.asarray(rho, dtype=float)
    s, c = math.sin(theta), math.cos(theta)
    with np.errstate(all="ignore"):
        direct = _chi_bar_closed(k, rho, s, c)
    small = rho < RHO_SERIES
    if np.any(small):
        direct = np.array(direct, dtype=float)
        direct[small] = _chi_bar_series(int(k), rho[small], s)
    return direct[()] if direct.ndim == 0 else direct


def chi(k: int, cfg: HolographicConfig) -> float:
    """Aperture average of |r0 - y e_y|^-k over y in [-L, L]."""
    return float(scaled_chi(k, cfg.rho, cfg.theta)) / cfg.D**k


def chi_bar(k: int, cfg: HolographicConfig) -> float:
    """Aperture average of (y - y0) / |r0 - y e_y|^(k+1) over y in [-L, L]."""
    return float(scaled_chi_bar(k, cfg.rho, cfg.theta)) / cfg.D**k


# ---------------------------------------------------------------------------
# limit quadric


def _quadric_parts(c2, c3, c4, c6, b2, b3, b5, z0):
    m2 = (-b3 / c2, c4 * z0 / c2)
    gamma1 = (3 * c2 * c4 - b3**2 - z0**2 * c4**2) / c2**2
    a_off = (3 * c2 * b5 + c4 * b3) * z0 / c2**2
    A = ((3 * c6 * z0**2 - 2 * c4) * c2 - b3**2) / c2**2, a_off, (c2 * c4 - z0**2 * (c4**2 + 3 * c2 * c6)) / c2**2
    b_off = (b2 * c3 - c2 * b3) * z0 / c2**2
    B = (c2**2 - z0**2 * c2 * c4 - b2**2) / c2**2, b_off, (c2 * c4 - c3**2) * z0**2 / c2**2
    return m2, gamma1, A, B


def _sym(t) -> np.ndarray:
    return np.array([[t[0], t[1]], [t[1], t[2]]], dtype=float)


@dataclass(frozen=True)
class HolographicCoefficients:
    chi: dict[int, float]
    chi_bar: dict[int, float]
    m2: np.ndarray
    gamma1: float
    A: np.ndarray
    B: np.ndarray
    wavenumber: float

    @property
    def M2(self) -> np.ndarray:
        return self.A + self.wavenumber**2 * self.B

    def as_quadric(self) -> QuadricModel:
        return _with_kind(QuadricModel(self.m2, self.gamma1, self.A, self.B, self.wavenumber))


def holographic_coefficients(cfg: HolographicConfig) -> HolographicCoefficients:
    D, rho, th = cfg.D, cfg.rho, cfg.theta
    ch = {k: float(scaled_chi(k, rho, th)) / D**k for k in CHI_ORDERS}
    cb = {k: float(scaled_chi_bar(k, rho, th)) / D**k for k in CHI_BAR_ORDERS}
    m2, g1, A, B = _quadric_parts(ch[2], ch[3], ch[4], ch[6], cb[2], cb[3], cb[5], cfg.z0)
    return HolographicCoefficients(ch, cb, np.array(m2), float(g1), _sym(A), _sym(B), 2 * math.pi / cfg.wavelength)


def _scaled_parts(rho, theta, L_over_lambda):
    c = math.cos(theta)
    ch = [scaled_chi(k, rho, theta) for k in CHI_ORDERS]
    cb = [scaled_chi_bar(k, rho, theta) for k in CHI_BAR_ORDERS]
    m2, g1, A, B = _quadric_parts(*ch, *cb, c)
    k2 = (2 * math.pi * L_over_lambda / np.asarray(rho, dtype=float)) ** 2
    M2 = tuple(a + k2 * b for a, b in zip(A, B))
    return m2, g1, M2


def scaled_coefficients(rho: float, theta: float, L_over_lambda: float):
    """Dimensionless ``(D^2 gamma1, D m2, D^2 M2)``."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    if not abs(theta) < math.pi / 2:
        raise DomainError("theta must lie in (-pi/2, pi/2)")
    m2, g1, M2 = _scaled_parts(rho, theta, L_over_lambda)
    return float(g1), np.array(m2, dtype=float), _sym(M2)


def scaled_min_eigenvalue(rho, theta: float, L_over_lambda: float):
    """Smallest eigenvalue of D^2 M2, vectorized over rho."""
    _, _, (a, b, d) = _scaled_parts(rho, theta, L_over_lambda)
    return (a + d) / 2 - np.hypot((a - d) / 2, b)


# ---------------------------------------------------------------------------
# feasibility region


@dataclass(frozen=True)
class FeasibilityEntry:
    theta: float
    rho_intervals: list[tuple[float, float]]
    open_ended: bool = False


@dataclass(frozen=True)
class FeasibilityBoundary:
    L_over_lambda: float
    entries: list[FeasibilityEntry]

    @property
    def anomalies(self) -> list[float]:
        """Elevations where more than one feasible interval was found."""
        return [e.theta for e in self.entries if len(e.rho_intervals) > 1]

    @property
    def empty(self) -> bool:
        return all(not e.rho_intervals for e in self.entries)


def default_theta_grid(n: int = 721) -> np.ndarray:
    lim = math.radians(89.9)
    return np.linspace(-lim, lim, n)


def feasible_rho_intervals(
    theta: float,
    L_over_lambda: float,
    rho_min: float = 1e-4,
    rho_max: float = 1e3,
    n_samples: int = 2000,
    rtol: float = 1e-10,
) -> FeasibilityEntry:
    if not (0 < rho_min < rho_max) or n_samples < 2:
        raise ValueError("empty rho search range")
    if not abs(theta) < math.pi / 2:
        raise DomainError("theta must lie in (-pi/2, pi/2)")
    rho = np.geomspace(rho_min, rho_max, n_samples)
    vals = scaled_min_eigenvalue(rho, theta, L_over_lambda)
    pos = vals > 0

    def f(r):
        return float(scaled_min_eigenvalue(r, theta, L_over_lambda))

    roots = []
    for i in np.flatnonzero(pos[:-1] != pos[1:]):
        roots.append(brentq(f, rho[i], rho[i + 1], xtol=1e-300, rtol=max(rtol, 4 * np.finfo(float).eps)))
    edges = ([rho_min] if pos[0] else []) + roots + ([rho_max] if pos[-1] else [])
    intervals = [(edges[i], edges[i + 1]) for i in range(0, len(edges), 2)]
    return FeasibilityEntry(float(theta), intervals, open_ended=bool(pos[0] or pos[-1]))


def feasibility_boundary(
    L_over_lambda: float,
    theta_grid=None,
    rho_search: tuple[float, float, int] = (1e-4, 1e3, 2000),
) -> FeasibilityBoundary:
    """Feasible rho intervals (min eigenvalue of D^2 M2 > 0) for each elevation."""
    thetas = default_theta_grid() if theta_grid is None else np.asarray(theta_grid, dtype=float)
    lo, hi, n = rho_search
    entries = [feasible_rho_intervals(float(t), L_over_lambda, lo, hi, int(n)) for t in thetas]
    return FeasibilityBoundary(float(L_over_lambda), entries)


# ---------------------------------------------------------------------------
# broadside (y0 = 0)


def _denominator_series(n_terms: int = 24) -> list[float]:
    # phi2^2 (1 + x) + phi2 - 2 with x = rho^2; the x^0 and x^1 terms cancel exactly
    phi = [Fraction((-1) ** n, 2 * n + 1) for n in range(n_terms + 2)]
    sq = [sum(phi[i] * phi[j - i] for i in range(j + 1)) for j in range(n_terms + 2)]
    g = [sq[j] + (sq[j - 1] if j else 0) + phi[j] for j in range(n_terms + 2)]
    g[0] -= 2
    assert g[0] == 0 and g[1] == 0
    return [float(c) for c in g[2:]]


_G_OVER_X2 = np.array(_denominator_series()[::-1])


def broadside_lhs(rho):
    """Left-hand side of the broadside feasibility condition (<= L / lambda)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("rho must be positive")
    x = rho * rho
    p = np.arctan(rho) / rho
    num = 7 * (1 + x) ** 2 * p * p + 3 * (5 + 3 * x) * p + 2
    with np.errstate(all="ignore"):
        direct = rho / (2 * math.pi) * np.sqrt(num / (4 * (1 + x) * (p * p * (1 + x) + p - 2)))
        series = np.sqrt(num / (4 * (1 + x) * np.polyval(_G_OVER_X2, x))) / (2 * math.pi * rho)
    out = np.where(rho < 0.1, series, direct)
    return out[()] if out.ndim == 0 else out


def broadside_asymptote_far(rho):
    """Leading behaviour of broadside_lhs as rho -> 0 (large D/L)."""
    return 3 * math.sqrt(15) / (2 * math.pi * np.asarray(rho, dtype=float))


def broadside_asymptote_near(rho):
    """Leading behaviour of broadside_lhs as rho -> inf (small D/L)."""
    q = math.pi**2 - 8
    return 0.25 * math.sqrt(7 / q) * (np.asarray(rho, dtype=float) + (math.pi**2 + 20) / (14 * math.pi * q))


def broadside_threshold(bounds: tuple[float, float] = (1e-3, 1e3)) -> tuple[float, float]:
    """Minimizer and minimum of broadside_lhs."""
    res = minimize_scalar(
        lambda u: float(broadside_lhs(math.exp(u))),
        bounds=(math.log(bounds[0]), math.log(bounds[1])),
        method="bounded",
        options={"xatol": 1e-10},
    )
    rho_star = math.exp(res.x)
    return rho_star, float(broadside_lhs(rho_star))


def broadside_roots(L_over_lambda: float) -> tuple[float, float] | None:
    """The two rho where broadside_lhs equals L/lambda, or None below threshold."""
    rho_star, vmin = broadside_threshold()
    if L_over_lambda <= vmin:
        return None

    def f(r):
        return float(broadside_lhs(r)) - L_over_lambda

    lo = rho_star
    while f(lo) < 0:
        lo /= 2
    hi = rho_star
    while f(hi) < 0:
        hi *= 2
    r_lo = brentq(f, lo, rho_star, xtol=1e-300, rtol=1e-14)
    r_hi = brentq(f, rho_star, hi, xtol=1e-300, rtol=1e-14)
    return r_lo, r_hi


def broadside_gammas(L: float, wavelength: float, z0: float) -> tuple[float, float, float]:
    if not z0 > 0:
        raise DomainError("z0 must be positive")
    c2 = math.atan(L / z0) / (L * z0)
    q = L * L + z0 * z0
    k2 = (2 * math.pi / wavelength) ** 2
    g1 = (5 * c2 - 1 / q) * (c2 + 1 / q) / (4 * z0**2 * c2**2)
    g2 = ((L * L + 7 * z0 * z0) / q**2 + c2) / (8 * c2 * z0**2) + 0.5 * k2 * (1 - 1 / (c2 * q))
    g3 = -(7 * c2**2 + 3 * (3 * L * L + 5 * z0 * z0) / q**2 * c2 + 2 / q**2) / (8 * z0**2 * c2**2) + k2 / (
        2 * c2**2
    ) * (c2**2 + c2 / q - 2 / (z0**2 * q))
    return g1, g2, g3


def fraunhofer_limits(L: float, wavelength: float) -> tuple[float, float, float]:
    """(Fraunhofer distance, approximate D_max, approximate D_min) at broadside."""
    d_fraun = 8 * L * L / wavelength
    d_max = 2 * math.pi * L * L / (3 * wavelength * math.sqrt(15))
    q = math.pi**2 - 8
    denom = 4 * L / wavelength * math.sqrt(q / 7) - (math.pi**2 + 20) / (14 * math.pi * q)
    d_min = L / denom if denom > 0 else math.nan
    return d_fraun, d_max, d_min


# ---------------------------------------------------------------------------
# large D/L expansions (through rho^2)


@dataclass(frozen=True)
class HighDLSeries:
    D3chi3: float
    D2chibar2: float
    D3chibar3: float
    D2gamma1: float
    D2M2: np.ndarray
    D2gamma2: float
    D2gamma3: float
    Dm2: np.ndarray
    mu: float
    feasible: bool


def highdl_rhs(theta: float, L_over_lambda: float) -> float:
    """Bound on (D/L)^2 below which the truncated D^2 gamma3 is positive."""
    c2 = math.cos(theta) ** 2
    return (-20 + 27 * c2 + c2 * c2 / 15 * (2 * math.pi * L_over_lambda) ** 2) / 9


def highdl_max_distance(theta: float, L_over_lambda: float) -> float:
    """Approximate largest feasible D/L (0 when the approximation predicts none)."""
    rhs = highdl_rhs(theta, L_over_lambda)
    return math.sqrt(rhs) if rhs > 0 else 0.0


def highDL_series(theta: float, rho: float, L_over_lambda: float, kappa: float = 0.5) -> HighDLSeries:
    if not 0 < rho < 0.5:
        raise DomainError("series evaluated only for 0 < rho < 0.5")
    if rho > 0.3:
        warnings.warn("rho > 0.3: large-D/L series may be inaccurate", stacklevel=2)
    c, s = math.cos(theta), math.sin(theta)
    c2, r2 = c * c, rho * rho
    K = (2 * math.pi * L_over_lambda) ** 2
    d3chi3 = 1 + (2 - 2.5 * c2) * r2
    d2cb2 = -s * (1 + (1 - 2.5 * c2) * r2)
    d3cb3 = -s * (1 + (2 - 4 * c2) * r2)
    d2g1 = 2 + (15 - 16 * c2) / 3 * r2
    base = np.array([[-3 + 4 * c2, -4 * s * c], [-4 * s * c, 1 - 4 * c2]])
    rank1 = K * c2 / 3 * np.array([[c2, -s * c], [-s * c, s * s]])
    corr_a = np.array(
        [
            [-20 + 92 * c2 - 76 * c2 * c2, -s * c * (46 - 76 * c2)],
            [-s * c * (46 - 76 * c2), 7 - 76 * c2 + 76 * c2 * c2],
        ]
    ) / 3
    corr_b = K * c2 / 45 * np.array(
        [
            [c2 * (61 - 74 * c2), -s * c * (45 - 74 * c2)],
            [-s * c * (45 - 74 * c2), 30 - 103 * c2 + 74 * c2 * c2],
        ]
    )
    d2M2 = base + rank1 + (corr_a + corr_b) * r2
    d2g2 = 1 + c2 / 3 * K + ((7 - 11 * c2) / 3 + K * (30 - 43 * c2) / 45 * c2) * r2
    d2g3 = -3 + ((-20 + 27 * c2) / 3 + K * c2 * c2 / 45) * r2
    dm2 = np.array([s * (1 + (1 - 8 / 3 * c2) * r2), c * (1 + (7 / 3 - 8 / 3 * c2) * r2)])
    mu = (2 / 3 - kappa) - (15 * c2 - 10 + c2 * c2 / 3 * K) / 135 * r2
    feasible = (1 / rho) ** 2 < highdl_rhs(theta, L_over_lambda)
    return HighDLSeries(d3chi3, d2cb2, d3cb3, d2g1, d2M2, d2g2, d2g3, dm2, mu, bool(feasible))
