"""
Utilities package for the Gauss-Bonnet curvature toolkit.

This package contains the error hierarchy, finite-difference helpers
and seeded random generators shared by the services.
"""

from .errors import (
    GBCError,
    DimensionMismatchError,
    DegreeError,
    SymmetryError,
    RankDeficientError,
    NumericalBreakdownError,
    ManifestError
)
from .numerics import (
    central_difference,
    five_point_derivative,
    richardson,
    compensated_sum,
    relative_error
)

__all__ = [
    'GBCError',
    'DimensionMismatchError',
    'DegreeError',
    'SymmetryError',
    'RankDeficientError',
    'NumericalBreakdownError',
    'ManifestError',
    'central_difference',
    'five_point_derivative',
    'richardson',
    'compensated_sum',
    'relative_error'
]
