"""Beamfocusing feasibility and SNR regions for uniform linear arrays."""

__version__ = "0.1.0"

from .array_model import ArrayConfig, DomainError
from .focusing import focus, snr_at, snr_grid
from .holographic import HolographicConfig, feasibility_boundary, holographic_coefficients
from .local_expansion import QuadricKind, classify_quadric, ellipsoid_geometry, quadric_coefficients

__all__ = [
    "ArrayConfig",
    "DomainError",
    "HolographicConfig",
    "QuadricKind",
    "classify_quadric",
    "ellipsoid_geometry",
    "feasibility_boundary",
    "focus",
    "holographic_coefficients",
    "quadric_coefficients",
    "snr_at",
    "snr_grid",
]
