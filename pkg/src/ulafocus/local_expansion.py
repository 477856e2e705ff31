"""Second-order SNR expansion around the intended receiver for a finite array.

Near r0 the normalized SNR behaves as ``1 - (2 d^T m + d^T Mq d)`` with
``d = r - r0``.  For x0 = 0 the vector ``m`` and the block-diagonal matrix
``Mq`` have closed forms in terms of the structural sums::

    s(k)    = mean_m |r0 - p_m|^-k
    sbar(k) = mean_m (m dT - y0) / |r0 - p_m|^(k+1)

The kappa level set of the quadratic model is a quadric: an ellipsoid when
all eigenvalues of ``Mq`` are positive, a hyperboloid otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .array_model import (
    ArrayConfig,
    DomainError,
    channel_block,
    element_positions,
    scalar_green,
)

S_ORDERS = (2, 3, 4, 5, 6)
SBAR_ORDERS = (2, 3, 4, 5)


class QuadricKind(str, Enum):
    ELLIPSOID = "ellipsoid"
    HYPERBOLOID = "hyperboloid"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class StructuralSums:
    s: dict[int, float]
    s_bar: dict[int, float]


def structural_sums(cfg: ArrayConfig, r0) -> StructuralSums:
    """Compensated (fsum) evaluation of s(k) and sbar(k)."""
    r0 = np.asarray(r0, dtype=float)
    d = r0[None, :] - element_positions(cfg)
    dist = np.linalg.norm(d, axis=1)
    if np.any(dist < 1e-9 * cfg.wavelength):
        raise DomainError("target coincides with an array element")
    offset = (-d[:, 1]).tolist()  # m dT - y0
    n = cfg.n_elements
    s = {k: math.fsum((dist**-k).tolist()) / n for k in S_ORDERS}
    s_bar = {k: math.fsum((np.asarray(offset) / dist ** (k + 1)).tolist()) / n for k in SBAR_ORDERS}
    return StructuralSums(s=s, s_bar=s_bar)


def _local_frame(cfg: ArrayConfig, m: int, r0):
    if abs(m) > cfg.M:
        raise IndexError(f"element index {m} outside [-{cfg.M}, {cfg.M}]")
    r0 = np.asarray(r0, dtype=float)
    p = np.array([0.0, m * cfg.delta_t, 0.0])
    rm = r0 - p
    n = float(np.linalg.norm(rm))
    if n < 1e-9 * cfg.wavelength:
        raise DomainError("target coincides with an array element")
    P = np.outer(rm, rm) / n**2
    c = 1 + 1j * cfg.wavenumber * n
    return p, rm, n, P, np.eye(3) - P, c


def gradient_block(cfg: ArrayConfig, m: int, r0, delta) -> np.ndarray:
    """First-order term of H_m(r0 + delta), linear in delta."""
    p, rm, n, P, Pp, c = _local_frame(cfg, m, r0)
    delta = np.asarray(delta, dtype=float)
    H0 = channel_block(cfg, m, r0)
    return (
        -c * (delta @ rm) / n**2 * H0
        - np.outer(rm, delta) / n**2 @ H0
        - H0 @ np.outer(delta, rm) / n**2
    )


def hessian_block(cfg: ArrayConfig, m: int, r0, delta) -> np.ndarray:
    """Second-order Taylor term of H_m(r0 + delta), quadratic in delta.

    The bracket below is the full second directional derivative along
    ``delta``; the Taylor term carries the extra factor 1/2.
    """
    p, rm, n, P, Pp, c = _local_frame(cfg, m, r0)
    delta = np.asarray(delta, dtype=float)
    h0 = scalar_green(r0, p, cfg.wavelength, cfg.xi)
    DD = np.outer(delta, delta)
    along = delta @ P @ delta
    across = delta @ Pp @ delta
    xi1 = -2 * Pp @ DD @ Pp + 2 * P @ DD @ Pp + 2 * Pp @ DD @ P + along * Pp + 2 * across * P
    xi2 = 2 * P @ DD @ Pp + 2 * Pp @ DD @ P - across * Pp
    xi3 = along * Pp
    return 0.5 * h0 / n**2 * (xi1 + c * xi2 + c * c * xi3)


@dataclass(frozen=True)
class QuadricModel:
    """Local SNR quadric ``1 - kappa = 2 d^T m_vec + d^T Mq d``.

    ``gamma1`` is the x-block scalar and ``M2`` the yz-block; ``A`` and ``B``
    split ``M2 = A + k^2 B`` with ``k = 2 pi / lambda``.
    """

    m2: np.ndarray
    gamma1: float
    A: np.ndarray
    B: np.ndarray
    wavenumber: float
    kind: QuadricKind = field(default=QuadricKind.DEGENERATE)

    @property
    def M2(self) -> np.ndarray:
        return self.A + self.wavenumber**2 * self.B

    @property
    def m_vec(self) -> np.ndarray:
        return np.concatenate([[0.0], self.m2])

    @property
    def Mq(self) -> np.ndarray:
        out = np.zeros((3, 3))
        out[0, 0] = self.gamma1
        out[1:, 1:] = self.M2
        return out

    def eigenvalues(self) -> np.ndarray:
        """gamma1 followed by the eigenvalues of M2 (descending)."""
        return np.concatenate([[self.gamma1], np.linalg.eigvalsh(self.M2)[::-1]])

    def normalized_snr(self, delta) -> np.ndarray:
        """Quadratic model of SNR(r0 + delta) / SNR(r0); delta is ``(..., 3)``."""
        d = np.asarray(delta, dtype=float)
        return 1 - (2 * d @ self.m_vec + np.einsum("...i,ij,...j->...", d, self.Mq, d))


def _classify(eigs: np.ndarray) -> QuadricKind:
    eps = 1e-10 * max(float(np.max(np.abs(eigs))), np.finfo(float).tiny)
    lo = float(np.min(eigs))
    if lo > eps:
        return QuadricKind.ELLIPSOID
    if lo < -eps:
        return QuadricKind.HYPERBOLOID
    return QuadricKind.DEGENERATE


def quadric_from_sums(sums: StructuralSums, z0: float, wavenumber: float) -> QuadricModel:
    s, sb = sums.s, sums.s_bar
    s2, s3, s4, s6 = s[2], s[3], s[4], s[6]
    sb2, sb3, sb5 = sb[2], sb[3], sb[5]
    m2 = np.array([-sb3, z0 * s4]) / s2
    gamma1 = (3 * s2 * s4 - sb3**2 - z0**2 * s4**2) / s2**2
    off_a = (s4 * sb3 + 3 * s2 * sb5) * z0
    A = np.array(
        [
            [(3 * z0**2 * s6 - 2 * s4) * s2 - sb3**2, off_a],
            [off_a, (s4 - 3 * s6 * z0**2) * s2 - (s4 * z0) ** 2],
        ]
    ) / s2**2
    off_b = (sb2 * s3 - sb3 * s2) * z0
    B = np.array(
        [
            [s2**2 - z0**2 * s2 * s4 - sb2**2, off_b],
            [off_b, z0**2 * (s4 * s2 - s3**2)],
        ]
    ) / s2**2
    q = QuadricModel(m2=m2, gamma1=gamma1, A=A, B=B, wavenumber=wavenumber)
    return _with_kind(q)


def _with_kind(q: QuadricModel) -> QuadricModel:
    return QuadricModel(q.m2, q.gamma1, q.A, q.B, q.wavenumber, _classify(q.eigenvalues()))


def quadric_coefficients(cfg: ArrayConfig, r0) -> QuadricModel:
    """Quadric SNR coefficients for a target on the yz-plane."""
    r0 = np.asarray(r0, dtype=float)
    if abs(r0[0]) >= 1e-12 * cfg.wavelength:
        raise DomainError("closed-form quadric requires x0 = 0")
    if not r0[2] > 0:
        raise DomainError("closed-form quadric requires z0 > 0")
    return quadric_from_sums(structural_sums(cfg, r0), float(r0[2]), cfg.wavenumber)


@dataclass(frozen=True)
class Classification:
    kind: QuadricKind
    eigenvalues: np.ndarray  # gamma1, then M2 eigenvalues descending
    sorted_eigenvalues: np.ndarray  # all three, descending
    x_block_is_largest: bool
    mu: float


def _mu(q: QuadricModel, kappa: float) -> float:
    return 1 - kappa + float(q.m2 @ np.linalg.solve(q.M2, q.m2))


def classify_quadric(q: QuadricModel, kappa: float) -> Classification:
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    eigs = q.eigenvalues()
    srt = np.sort(eigs)[::-1]
    try:
        mu = _mu(q, kappa)
    except np.linalg.LinAlgError:
        mu = math.nan
    return Classification(_classify(eigs), eigs, srt, bool(eigs[0] >= srt[0]), mu)


@dataclass(frozen=True)
class EllipsoidGeometry:
    mu: float
    semi_axes: np.ndarray  # descending gamma order, so ascending length
    gammas: np.ndarray
    axes: np.ndarray  # columns are unit axis directions in xyz
    center: np.ndarray
    volume: float
    kappa: float


def ellipsoid_geometry(q: QuadricModel, r0, kappa: float) -> EllipsoidGeometry:
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    if _classify(q.eigenvalues()) is not QuadricKind.ELLIPSOID:
        raise ValueError("quadric is not an ellipsoid")
    r0 = np.asarray(r0, dtype=float)
    Mq = q.Mq
    gammas, vecs = np.linalg.eigh(Mq)
    order = np.argsort(gammas)[::-1]
    gammas, vecs = gammas[order], vecs[:, order]
    mu = _mu(q, kappa)
    semi = np.sqrt(mu / gammas)
    center = r0 - np.linalg.solve(Mq, q.m_vec)
    volume = 4 * math.pi / 3 * math.sqrt(mu**3 / float(np.prod(gammas)))
    return EllipsoidGeometry(mu, semi, gammas, vecs, center, volume, kappa)


@dataclass(frozen=True)
class ConicCurve:
    """Intersection of the kappa quadric with the yz-plane.

    ``branches`` holds ``(N, 2)`` arrays of absolute (y, z) points.
    """

    kind: str  # "ellipse", "hyperbola" or "degenerate"
    branches: list[np.ndarray]
    center: np.ndarray
    mu: float


def kappa_conic_yz(q: QuadricModel, r0, kappa: float, n_points: int = 721, extent: float | None = None) -> ConicCurve:
    """Sample the conic ``2 d.m2 + d^T M2 d = 1 - kappa`` in the yz-plane.

    ``extent`` bounds the hyperbola branches (distance from the center); it
    defaults to ten times the focal scale.
    """
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    r0 = np.asarray(r0, dtype=float)
    y0z0 = r0[1:] if r0.size == 3 else r0
    M2 = q.M2
    gam, vec = np.linalg.eigh(M2)
    scale = max(float(np.max(np.abs(gam))), np.finfo(float).tiny)
    if np.min(np.abs(gam)) <= 1e-12 * scale:
        return ConicCurve("degenerate", [], np.full(2, np.nan), math.nan)
    center_off = -np.linalg.solve(M2, q.m2)
    mu = 1 - kappa + float(q.m2 @ np.linalg.solve(M2, q.m2))
    center = y0z0 + center_off
    if abs(mu) <= 1e-14:
        return ConicCurve("degenerate", [], center, mu)
    if np.all(gam > 0) or np.all(gam < 0):
        if mu / gam[0] <= 0:
            return ConicCurve("degenerate", [], center, mu)
        t = np.linspace(0, 2 * np.pi, n_points)
        a, b = np.sqrt(mu / gam)
        pts = center + np.outer(a * np.cos(t), vec[:, 0]) + np.outer(b * np.sin(t), vec[:, 1])
        return ConicCurve("ellipse", [pts], center, mu)
    # hyperbola: the eigen-direction whose eigenvalue shares the sign of mu is the transverse axis
    i_t = 0 if gam[0] * mu > 0 else 1
    i_c = 1 - i_t
    a = math.sqrt(mu / gam[i_t])
    b = math.sqrt(-mu / gam[i_c])
    if extent is None:
        extent = 10 * max(a, b)
    tmax = math.asinh(max(extent / b, 1.0))
    t = np.linspace(-tmax, tmax, n_points)
    branches = []
    for sign in (1.0, -1.0):
        pts = center + np.outer(sign * a * np.cosh(t), vec[:, i_t]) + np.outer(b * np.sinh(t), vec[:, i_c])
        branches.append(pts)
    return ConicCurve("hyperbola", branches, center, mu)


def conic_residual(q: QuadricModel, r0, kappa: float, pts: np.ndarray) -> np.ndarray:
    """Residual of the conic equation at absolute (y, z) points."""
    r0 = np.asarray(r0, dtype=float)
    d = np.asarray(pts) - r0[1:]
    return 2 * d @ q.m2 + np.einsum("ni,ij,nj->n", d, q.M2, d) - (1 - kappa)
