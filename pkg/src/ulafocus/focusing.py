"""Maximum-ratio transmit filter towards r0 and exact SNR evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array_model import (
    COINCIDENCE_TOL,
    ArrayConfig,
    DomainError,
    assemble_pol_channel,
    element_positions,
    gram_matrix,
)

HERMITIAN_TOL = 1e-10
DEGENERACY_GAP = 1e-9


@dataclass(frozen=True)
class DominantMode:
    lambda_max: float
    u: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class TransmitFilter:
    w: np.ndarray
    t_pol: int

    def per_element(self) -> np.ndarray:
        """Weights reshaped to ``(2M+1, 3)``, zero-padded beyond t_pol."""
        blocks = self.w.reshape(-1, self.t_pol)
        out = np.zeros((blocks.shape[0], 3), dtype=complex)
        out[:, : self.t_pol] = blocks
        return out


def _trig_eigvals(G: np.ndarray) -> np.ndarray:
    # closed-form roots of the characteristic cubic; only ~sqrt(eps) accurate at repeated roots
    q = float(np.trace(G).real) / 3
    p1 = abs(G[0, 1]) ** 2 + abs(G[0, 2]) ** 2 + abs(G[1, 2]) ** 2
    diag = np.real(np.diag(G)) - q
    p2 = float(np.sum(diag**2)) + 2 * p1
    scale = max(float(np.max(np.abs(G))), np.finfo(float).tiny)
    if p2 <= (1e-30 * scale) ** 2:
        return np.full(3, q)
    p = math.sqrt(p2 / 6)
    B = (G - q * np.eye(3)) / p
    r = float(np.real(np.linalg.det(B))) / 2
    phi = math.acos(min(1.0, max(-1.0, r))) / 3
    e1 = q + 2 * p * math.cos(phi)
    e3 = q + 2 * p * math.cos(phi + 2 * math.pi / 3)
    e2 = 3 * q - e1 - e3
    return np.array([e1, e2, e3])


def _null_vector(A: np.ndarray) -> np.ndarray:
    # a_i x a_j is annihilated by rows i and j of A (bilinear cross product)
    rows = [A[0], A[1], A[2]]
    cands = [np.cross(rows[i], rows[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    norms = [np.linalg.norm(c) for c in cands]
    best = int(np.argmax(norms))
    row_scale = max(np.linalg.norm(r) for r in rows)
    if norms[best] > 1e-7 * row_scale**2 and row_scale > 0:
        return cands[best] / norms[best]
    # top eigenspace is at least two-dimensional: any vector orthogonal to the dominant row
    a = rows[int(np.argmax([np.linalg.norm(r) for r in rows]))]
    if np.linalg.norm(a) == 0:
        return np.array([1.0, 0.0, 0.0], dtype=complex)
    cands = [np.cross(e, a) for e in np.eye(3)]
    v = max(cands, key=np.linalg.norm)
    return v / np.linalg.norm(v)


def _complement(u: np.ndarray) -> np.ndarray:
    """Orthonormal 3x2 basis of the Hermitian complement of unit vector u."""
    e = np.zeros(3, dtype=complex)
    e[int(np.argmin(np.abs(u)))] = 1.0
    v1 = e - u * np.vdot(u, e)
    v1 /= np.linalg.norm(v1)
    v2 = np.conj(np.cross(u, v1))
    return np.column_stack([v1, v2 / np.linalg.norm(v2)])


def _top_and_rest(G: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    # top eigenpair from the cubic, the other two from the deflated 2x2 block
    e = _trig_eigvals(G)
    u = _null_vector(G - e[0] * np.eye(3)).astype(complex)
    u /= np.linalg.norm(u)
    lam = float(np.real(np.vdot(u, G @ u)))
    Q = _complement(u)
    B = Q.conj().T @ G @ Q
    a, d = float(B[0, 0].real), float(B[1, 1].real)
    mid, rad = (a + d) / 2, math.hypot((a - d) / 2, abs(B[0, 1]))
    return lam, u, np.array([mid + rad, mid - rad])


def hermitian_eigvals(G: np.ndarray) -> np.ndarray:
    """Eigenvalues of a 3x3 Hermitian matrix, descending."""
    G = np.asarray(G, dtype=complex)
    lam, _, rest = _top_and_rest(G)
    return np.sort(np.concatenate([[lam], rest]))[::-1]


def _fix_phase(u: np.ndarray) -> np.ndarray:
    for c in u:
        if abs(c) > 1e-12:
            return u * (abs(c) / c)
    return u


def dominant_mode(G: np.ndarray) -> DominantMode:
    """Top eigenpair of a 3x3 Hermitian PSD matrix."""
    G = np.asarray(G, dtype=complex)
    if G.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    scale = max(float(np.max(np.abs(G))), np.finfo(float).tiny)
    if np.max(np.abs(G - G.conj().T)) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian")
    G = 0.5 * (G + G.conj().T)
    lam, u, rest = _top_and_rest(G)
    degenerate = (lam - rest[0]) < DEGENERACY_GAP * max(abs(lam), np.finfo(float).tiny)
    return DominantMode(lambda_max=lam, u=_fix_phase(u), degenerate=bool(degenerate))


def mrt_weights(H0: np.ndarray, mode: DominantMode, M: int, t_pol: int | None = None) -> TransmitFilter:
    """w = H0^H u / sqrt((2M+1) lambda_max)."""
    if not mode.lambda_max > 0:
        raise ValueError("degenerate channel: lambda_max = 0")
    w = H0.conj().T @ mode.u / math.sqrt((2 * M + 1) * mode.lambda_max)
    if t_pol is None:
        t_pol = H0.shape[1] // (2 * M + 1)
    return TransmitFilter(w=w, t_pol=t_pol)


@dataclass(frozen=True)
class FocusedArray:
    """An array configuration focused on r0 with its MRT filter."""

    cfg: ArrayConfig
    r0: np.ndarray
    mode: DominantMode
    filt: TransmitFilter

    @property
    def snr0(self) -> float:
        return self.cfg.p_bar * self.mode.lambda_max / self.cfg.sigma2


def focus(cfg: ArrayConfig, r0) -> FocusedArray:
    r0 = np.asarray(r0, dtype=float)
    H0 = assemble_pol_channel(cfg, r0)
    mode = dominant_mode(gram_matrix(H0, cfg.M))
    return FocusedArray(cfg, r0, mode, mrt_weights(H0, mode, cfg.M, cfg.t_pol))


def snr_at(cfg: ArrayConfig, w: TransmitFilter, r) -> float:
    """P_bar |H_pol(r) w|^2 / (sigma2 (2M+1))."""
    v = assemble_pol_channel(cfg, r) @ w.w
    return cfg.p_bar * float(np.vdot(v, v).real) / (cfg.sigma2 * cfg.n_elements)


def snr_many(cfg: ArrayConfig, w: TransmitFilter, points: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Vectorized snr_at over an ``(N, 3)`` array; coincident points give NaN."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    pos = element_positions(cfg)
    W = w.per_element()
    k = cfg.wavenumber
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], chunk):
        P = points[start : start + chunk]
        d = P[:, None, :] - pos[None, :, :]
        n = np.linalg.norm(d, axis=2)
        close = n < COINCIDENCE_TOL * cfg.wavelength
        bad = np.any(close, axis=1)
        n = np.where(close, 1.0, n)
        h = np.where(close, 0.0, (cfg.xi / cfg.wavelength) * np.exp(-1j * k * n) / n)
        proj_w = np.einsum("nmk,mk->nm", d, W) / n**2
        v = np.einsum("nm,mk->nk", h, W) - np.einsum("nm,nmk->nk", h * proj_w, d)
        snr = np.sum(np.abs(v) ** 2, axis=1) * cfg.p_bar / (cfg.sigma2 * cfg.n_elements)
        snr[bad] = np.nan
        out[start : start + chunk] = snr
    return out


@dataclass(frozen=True)
class PlaneSpec:
    """Rectangular sampling of the yz-plane (x = 0)."""

    y_min: float
    y_max: float
    z_min: float
    z_max: float
    ny: int
    nz: int

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linspace(self.y_min, self.y_max, self.ny), np.linspace(self.z_min, self.z_max, self.nz)


def snr_grid(cfg: ArrayConfig, w: TransmitFilter, plane: PlaneSpec) -> np.ndarray:
    """SNR over the yz-plane, shape ``(nz, ny)``; NaN marks cells on an element."""
    y, z = plane.axes()
    Y, Z = np.meshgrid(y, z)
    pts = np.column_stack([np.zeros(Y.size), Y.ravel(), Z.ravel()])
    return snr_many(cfg, w, pts).reshape(Z.shape)


def check_target(cfg: ArrayConfig, r0) -> None:
    r0 = np.asarray(r0, dtype=float)
    if np.min(np.linalg.norm(element_positions(cfg) - r0, axis=1)) < COINCIDENCE_TOL * cfg.wavelength:
        raise DomainError("target coincides with an array element")
