"""Numerical tools for the smallest singular value of shifted Ginibre matrices."""

from __future__ import annotations

from .errors import (
    ContourCrossesPole,
    DomainError,
    EmptySample,
    GinibreLabError,
    LinAlgFailure,
    MaxSubdivisions,
    NoConvergence,
    RegimeError,
    TauEndpointWarning,
    TruncationWarning,
    UnknownIndex,
)
from .mde_core import ShiftParams, density, edges, psi, scale_c, solve_mde_h, solve_mde_y

__version__ = "0.1.0"

__all__ = [
    "ContourCrossesPole",
    "DomainError",
    "EmptySample",
    "GinibreLabError",
    "LinAlgFailure",
    "MaxSubdivisions",
    "NoConvergence",
    "RegimeError",
    "ShiftParams",
    "TauEndpointWarning",
    "TruncationWarning",
    "UnknownIndex",
    "density",
    "edges",
    "psi",
    "scale_c",
    "solve_mde_h",
    "solve_mde_y",
]
