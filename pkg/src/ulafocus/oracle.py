"""Brute-force counterparts of the closed-form expressions.

Nothing here reuses the algebra it checks: derivatives come from central
differences of the channel, aperture averages from midpoint sums, and
kappa-regions from contouring a dense exact SNR grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import directed_hausdorff

from .array_model import ArrayConfig, DomainError, channel_block, element_positions
from .focusing import PlaneSpec, TransmitFilter, snr_at, snr_grid
from .holographic import HolographicConfig
from .local_expansion import QuadricKind, gradient_block, hessian_block, quadric_coefficients


@dataclass(frozen=True)
class FDReport:
    target: str
    max_rel_error: float
    step: float
    order_estimate: float
    n_cases: int = 0


def random_directions(n: int, seed: int) -> np.ndarray:
    v = np.random.default_rng(seed).standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    den = np.linalg.norm(b)
    num = np.linalg.norm(a - b)
    if den == 0:
        return float(num)
    return float(num / den)


def _fd(cfg, m, r0, d, h, order):
    if order == 1:
        return (channel_block(cfg, m, r0 + h * d) - channel_block(cfg, m, r0 - h * d)) / (2 * h)
    fp = channel_block(cfg, m, r0 + h * d)
    fm = channel_block(cfg, m, r0 - h * d)
    # Taylor term is half the second difference quotient
    return (fp - 2 * channel_block(cfg, m, r0) + fm) / (2 * h * h)


def fd_derivative_check(
    cfg: ArrayConfig,
    m: int,
    r0,
    order: int,
    directions: np.ndarray | None = None,
    seed: int = 0,
    n_dirs: int = 8,
) -> FDReport:
    """Compare the first/second order channel expansion with central differences.

    Steps scale with the element distance: 1e-6 (gradient) or 1e-4 (Hessian)
    times |r0 - p_m|.  The order estimate uses two coarser steps where
    truncation dominates; central differences are second order.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    r0 = np.asarray(r0, dtype=float)
    p = element_positions(cfg)[m + cfg.M]
    dist = float(np.linalg.norm(r0 - p))
    if dist < 1e-9 * cfg.wavelength:
        raise DomainError("target coincides with an array element")
    if directions is None:
        directions = random_directions(n_dirs, seed)
    closed = gradient_block if order == 1 else hessian_block
    h = (1e-6 if order == 1 else 1e-4) * dist
    worst = 0.0
    orders = []
    for d in np.atleast_2d(directions):
        ref = closed(cfg, m, r0, d)
        worst = max(worst, _rel(_fd(cfg, m, r0, d, h, order), ref))
        if np.linalg.norm(ref) > 0:
            e1 = _rel(_fd(cfg, m, r0, d, 1e-3 * dist, order), ref)
            e2 = _rel(_fd(cfg, m, r0, d, 5e-4 * dist, order), ref)
            if e1 > 0 and e2 > 0:
                orders.append(math.log2(e1 / e2))
    est = float(np.median(orders)) if orders else math.nan
    return FDReport(f"{'gradient' if order == 1 else 'hessian'}[m={m}]", worst, h, est, len(directions))


# ---------------------------------------------------------------------------


def riemann_chi(k: int, kind: str, cfg: HolographicConfig, panels: int) -> float:
    """Midpoint-rule aperture average of the chi or chi_bar kernel."""
    if panels < 1:
        raise ValueError("panels must be >= 1")
    if kind not in ("chi", "chi_bar"):
        raise ValueError("kind must be 'chi' or 'chi_bar'")
    L, y0, z0 = cfg.L, cfg.y0, cfg.z0
    h = 2 * L / panels
    total = 0.0
    chunk = 1 << 20
    for start in range(0, panels, chunk):
        y = -L + h * (np.arange(start, min(start + chunk, panels)) + 0.5)
        dy = y - y0
        r2 = dy * dy + z0 * z0
        if kind == "chi":
            vals = r2 ** (-k / 2)
        else:
            vals = dy * r2 ** (-(k + 1) / 2)
        total += float(np.sum(vals))
    return total / panels


# ---------------------------------------------------------------------------


def power_sums(cfg: ArrayConfig, r0, orders) -> tuple[dict[int, float], dict[int, float]]:
    """Direct element averages of |r0-p|^-k and (m dT - y0)|r0-p|^-(k+1)."""
    r0 = np.asarray(r0, dtype=float)
    d = r0[None, :] - element_positions(cfg)
    dist = np.linalg.norm(d, axis=1)
    off = -d[:, 1]
    s = {k: float(np.mean(dist ** (-float(k)))) for k in orders}
    sb = {k: float(np.mean(off * dist ** (-float(k) - 1))) for k in orders}
    return s, sb


def cauchy_schwarz_gaps(cfg: ArrayConfig, r0, k: int, l: int) -> tuple[float, float]:
    """Relative slack of the two Cauchy-Schwarz bounds on the structural sums.

    ``s(2k) s(2l) >= s(k+l)^2`` and ``s(2k) (s(2l-2) - z0^2 s(2l)) >= sbar(k+l-1)^2``;
    both returned values are nonnegative when the bounds hold.
    """
    z0 = float(np.asarray(r0)[2])
    orders = {2 * k, 2 * l, k + l, 2 * l - 2, k + l - 1}
    s, sb = power_sums(cfg, r0, sorted(o for o in orders if o > 0) + [0])
    lhs1, rhs1 = s[2 * k] * s[2 * l], s[k + l] ** 2
    lhs2, rhs2 = s[2 * k] * (s[2 * l - 2] - z0 * z0 * s[2 * l]), sb[k + l - 1] ** 2
    return (lhs1 - rhs1) / lhs1, (lhs2 - rhs2) / max(s[2 * k] * s[2 * l - 2], np.finfo(float).tiny)


# ---------------------------------------------------------------------------


def snr_fd_quadric(cfg: ArrayConfig, w: TransmitFilter, r0, step: float) -> tuple[np.ndarray, np.ndarray]:
    """(m, M) such that SNR/SNR0 ~ 1 - 2 d.m - d^T M d, from central differences."""
    r0 = np.asarray(r0, dtype=float)
    f0 = snr_at(cfg, w, r0)

    def f(d):
        return snr_at(cfg, w, r0 + d) / f0

    E = np.eye(3) * step
    grad = np.array([(f(E[i]) - f(-E[i])) / (2 * step) for i in range(3)])
    H = np.empty((3, 3))
    for i in range(3):
        H[i, i] = (f(E[i]) - 2 + f(-E[i])) / step**2
        for j in range(i + 1, 3):
            H[i, j] = H[j, i] = (f(E[i] + E[j]) - f(E[i] - E[j]) - f(E[j] - E[i]) + f(-E[i] - E[j])) / (
                4 * step**2
            )
    return -grad / 2, -H / 2


def remainder_decay(cfg: ArrayConfig, w: TransmitFilter, r0, direction, t_values) -> list[tuple[float, float]]:
    """(t, |exact - quadric| / t^3) along r0 + t * direction."""
    r0 = np.asarray(r0, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(direction) - 1) > 1e-9:
        raise ValueError("direction must be unit norm")
    q = quadric_coefficients(cfg, r0)
    f0 = snr_at(cfg, w, r0)
    out = []
    for t in t_values:
        if t == 0:
            out.append((0.0, 0.0))
            continue
        d = t * direction
        err = abs(snr_at(cfg, w, r0 + d) / f0 - float(q.normalized_snr(d)))
        out.append((float(t), err / abs(t) ** 3))
    return out


def remainder_ratios(seq: list[tuple[float, float]]) -> list[float]:
    """error(t) / error(t/2) for consecutive dyadic entries."""
    errs = [e * t**3 for t, e in seq]
    return [errs[i] / errs[i + 1] for i in range(len(errs) - 1) if errs[i + 1] > 0]


# ---------------------------------------------------------------------------
# marching squares

# corner bits: 1 = (i, j), 2 = (i, j+1), 4 = (i+1, j+1), 8 = (i+1, j)
# edges: 0 bottom (i, j)-(i, j+1), 1 right, 2 top (i+1, j)-(i+1, j+1), 3 left
_SEGMENTS = {
    0: [], 15: [],
    1: [(3, 0)], 14: [(3, 0)],
    2: [(0, 1)], 13: [(0, 1)],
    3: [(3, 1)], 12: [(3, 1)],
    4: [(1, 2)], 11: [(1, 2)],
    6: [(0, 2)], 9: [(0, 2)],
    7: [(3, 2)], 8: [(3, 2)],
}


def _edge_key(i, j, e):
    if e == 0:
        return ("h", i, j)
    if e == 2:
        return ("h", i + 1, j)
    if e == 3:
        return ("v", i, j)
    return ("v", i, j + 1)


def _edge_point(V, y, z, key):
    kind, i, j = key
    if kind == "h":
        a, b = V[i, j], V[i, j + 1]
        t = a / (a - b)
        return (y[j] + t * (y[j + 1] - y[j]), z[i])
    a, b = V[i, j], V[i + 1, j]
    t = a / (a - b)
    return (y[j], z[i] + t * (z[i + 1] - z[i]))


def marching_squares(V: np.ndarray, y: np.ndarray, z: np.ndarray) -> list[tuple[np.ndarray, bool]]:
    """Zero contour of V (shape (nz, ny)) as (polyline, closed) pairs."""
    V = np.asarray(V, dtype=float)
    above = V > 0
    code = (
        above[:-1, :-1] * 1 + above[:-1, 1:] * 2 + above[1:, 1:] * 4 + above[1:, :-1] * 8
    ).astype(int)
    links: dict[tuple, list[tuple]] = {}

    def link(a, b):
        links.setdefault(a, []).append(b)
        links.setdefault(b, []).append(a)

    for i, j in zip(*np.nonzero((code != 0) & (code != 15))):
        c = code[i, j]
        if c in (5, 10):
            center = 0.25 * (V[i, j] + V[i, j + 1] + V[i + 1, j] + V[i + 1, j + 1])
            # a center above zero joins the two "above" corners, so the
            # contour cuts off the two "below" corners instead
            cut_bl_tr = (c == 5) != (center > 0)
            segs = [(3, 0), (1, 2)] if cut_bl_tr else [(0, 1), (2, 3)]
        else:
            segs = _SEGMENTS[c]
        for e1, e2 in segs:
            link(_edge_key(i, j, e1), _edge_key(i, j, e2))

    seen: set = set()
    lines = []
    # open chains start at degree-1 nodes
    starts = [k for k, v in links.items() if len(v) == 1] + list(links)
    for s in starts:
        if s in seen:
            continue
        chain = [s]
        seen.add(s)
        prev, cur = None, s
        while True:
            nxt = [n for n in links[cur] if n != prev and n not in seen]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            chain.append(cur)
            seen.add(cur)
        closed = len(chain) > 2 and s in links[cur] and len(links[s]) == 2
        pts = np.array([_edge_point(V, y, z, k) for k in chain])
        if closed:
            pts = np.vstack([pts, pts[:1]])
        lines.append((pts, closed))
    return lines


@dataclass(frozen=True)
class RegionBoundary:
    kappa: float
    points: list[np.ndarray]  # polylines of absolute (y, z)
    closed: bool
    level: float
    coarse: bool = False
    cell: tuple[float, float] = field(default=(math.nan, math.nan))


def _predicted_minor_axis(cfg: ArrayConfig, r0, kappa) -> tuple[float, np.ndarray]:
    """Full minor axis length of the predicted ellipse and its (y, z) direction."""
    try:
        q = quadric_coefficients(cfg, r0)
    except DomainError:
        return math.nan, np.zeros(2)
    if q.kind is not QuadricKind.ELLIPSOID:
        return math.nan, np.zeros(2)
    gam, vec = np.linalg.eigh(q.M2)
    mu = 1 - kappa + float(q.m2 @ np.linalg.solve(q.M2, q.m2))
    return 2 * math.sqrt(mu / gam[-1]), vec[:, -1]


def true_kappa_region(
    cfg: ArrayConfig,
    w: TransmitFilter,
    r0,
    kappa: float,
    window: tuple[float, float, float, float],
    resolution: int,
) -> RegionBoundary:
    """Boundary of the connected set {SNR >= kappa SNR(r0)} around r0 in the yz-plane."""
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    r0 = np.asarray(r0, dtype=float)
    y_min, y_max, z_min, z_max = window
    if z_min <= 0 <= z_max and y_max >= -cfg.half_aperture and y_min <= cfg.half_aperture:
        raise DomainError("window intersects the array segment")
    plane = PlaneSpec(y_min, y_max, z_min, z_max, resolution, resolution)
    y, z = plane.axes()
    level = kappa * snr_at(cfg, w, r0)
    V = snr_grid(cfg, w, plane) - level
    inside = V > 0
    labels, _ = ndimage.label(inside)
    i0 = int(np.argmin(np.abs(z - r0[2])))
    j0 = int(np.argmin(np.abs(y - r0[1])))
    lab = labels[i0, j0]
    if lab == 0:
        raise DomainError("target cell lies outside its own kappa-region; refine the grid")
    comp = labels == lab
    touches = bool(comp[0].any() or comp[-1].any() or comp[:, 0].any() or comp[:, -1].any())
    # suppress other lobes so only this component's boundary is traced
    scale = max(abs(level), np.finfo(float).tiny)
    W = np.where(comp, V, np.minimum(V, -scale))
    lines = marching_squares(W, y, z)
    dy = (y_max - y_min) / max(resolution - 1, 1)
    dz = (z_max - z_min) / max(resolution - 1, 1)
    minor, v = _predicted_minor_axis(cfg, r0, kappa)
    coarse = bool(np.isfinite(minor) and minor / (abs(v[0]) * dy + abs(v[1]) * dz) < 16)
    return RegionBoundary(kappa, [p for p, _ in lines], not touches, level, coarse, (dy, dz))


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def densify(poly: np.ndarray, spacing: float) -> np.ndarray:
    """Insert points so consecutive vertices are at most ``spacing`` apart."""
    out = [poly[:1]]
    for a, b in zip(poly[:-1], poly[1:]):
        n = max(int(math.ceil(np.linalg.norm(b - a) / spacing)), 1)
        t = np.arange(1, n + 1)[:, None] / n
        out.append(a + t * (b - a))
    return np.vstack(out)
