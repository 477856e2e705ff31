"""Uniform linear array geometry and the dyadic Green line-of-sight channel.

The array has ``2M+1`` elements on the y-axis at ``(0, m*delta_t, 0)``.
Each element carries up to three orthogonal infinitesimal dipoles; the
receiver always samples all three polarizations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Distances below this fraction of the wavelength count as coincident.
COINCIDENCE_TOL = 1e-9


class DomainError(ValueError):
    """Raised for geometrically invalid inputs (coincident points, z0 <= 0, ...)."""


@dataclass(frozen=True)
class ArrayConfig:
    M: int
    delta_t: float
    wavelength: float = 0.1
    t_pol: int = 3
    xi: complex | None = None
    p_bar: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 0:
            raise ValueError(f"M must be a nonnegative integer, got {self.M}")
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if self.t_pol not in (1, 2, 3):
            raise ValueError("t_pol must be 1, 2 or 3")
        if not (self.p_bar > 0 and self.sigma2 > 0):
            raise ValueError("p_bar and sigma2 must be positive")
        if self.xi is None:
            # |xi/lambda| = 1 by default
            object.__setattr__(self, "xi", complex(self.wavelength))

    @property
    def n_elements(self) -> int:
        return 2 * self.M + 1

    @property
    def half_aperture(self) -> float:
        """L = M * delta_t."""
        return self.M * self.delta_t

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def gain(self) -> float:
        """|xi / lambda|^2."""
        return abs(self.xi / self.wavelength) ** 2

    @classmethod
    def from_aperture(cls, n_elements: int, aperture: float, **kw) -> "ArrayConfig":
        """Build a config from the element count and the total aperture 2L."""
        if n_elements < 3 or n_elements % 2 == 0:
            raise ValueError("n_elements must be odd and >= 3 when the aperture is given")
        M = (n_elements - 1) // 2
        return cls(M=M, delta_t=aperture / (2 * M), **kw)


def element_positions(cfg: ArrayConfig) -> np.ndarray:
    """Element positions as a ``(2M+1, 3)`` array, ascending in m."""
    m = np.arange(-cfg.M, cfg.M + 1)
    pos = np.zeros((m.size, 3))
    pos[:, 1] = m * cfg.delta_t
    return pos


def _separation(r, p, wavelength):
    d = np.asarray(r, dtype=float) - np.asarray(p, dtype=float)
    n = float(np.linalg.norm(d))
    if n < COINCIDENCE_TOL * wavelength:
        raise DomainError(f"receiver coincides with a radiating element (distance {n:g} m)")
    return d, n


def scalar_green(r, p, wavelength: float, xi: complex) -> complex:
    """(xi/lambda) exp(-j 2 pi |r-p| / lambda) / |r-p|."""
    _, n = _separation(r, p, wavelength)
    phase = 2 * math.pi * n / wavelength
    return complex(xi / wavelength) * complex(math.cos(phase), -math.sin(phase)) / n


def transverse_projector(r, p, wavelength: float = 1.0) -> np.ndarray:
    """I3 minus the projector onto r - p."""
    d, n = _separation(r, p, wavelength)
    return np.eye(3) - np.outer(d, d) / n**2


def _check_index(cfg: ArrayConfig, m: int):
    if abs(m) > cfg.M:
        raise IndexError(f"element index {m} outside [-{cfg.M}, {cfg.M}]")


def channel_block(cfg: ArrayConfig, m: int, r) -> np.ndarray:
    """Full 3x3 channel H_m(r) = h_m(r) P_m^perp(r)."""
    _check_index(cfg, m)
    p = (0.0, m * cfg.delta_t, 0.0)
    return scalar_green(r, p, cfg.wavelength, cfg.xi) * transverse_projector(r, p, cfg.wavelength)


def channel_blocks(cfg: ArrayConfig, r) -> np.ndarray:
    """All element channels at once, shape ``(2M+1, 3, 3)``."""
    d = np.asarray(r, dtype=float)[None, :] - element_positions(cfg)
    n = np.linalg.norm(d, axis=1)
    if np.any(n < COINCIDENCE_TOL * cfg.wavelength):
        raise DomainError("receiver coincides with a radiating element")
    h = (cfg.xi / cfg.wavelength) * np.exp(-1j * cfg.wavenumber * n) / n
    proj = np.eye(3)[None] - d[:, :, None] * d[:, None, :] / (n**2)[:, None, None]
    return h[:, None, None] * proj


def assemble_pol_channel(cfg: ArrayConfig, r) -> np.ndarray:
    """H_pol(r): the ``3 x (2M+1) t_pol`` channel, blocks ordered m = -M..M."""
    blocks = channel_blocks(cfg, r)[:, :, : cfg.t_pol]
    return np.concatenate(list(blocks), axis=1)


def gram_matrix(H: np.ndarray, M: int) -> np.ndarray:
    """H H^H / (2M+1)."""
    G = H @ H.conj().T / (2 * M + 1)
    return 0.5 * (G + G.conj().T)
