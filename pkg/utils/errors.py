"""
Errors - Exception hierarchy shared by the library, the services and the CLI
"""

from typing import List, Optional, Sequence


class GBCError(Exception):
    """Base class for every library error."""


class DimensionMismatchError(GBCError, ValueError):
    """Operands live over different dimensions or bidegrees."""


class DegreeError(GBCError, ValueError):
    """A degree or order parameter is outside its admissible range."""


class SymmetryError(GBCError, ValueError):
    """An operation that needs a symmetric double form received a non-symmetric one."""


class RankDeficientError(GBCError, ValueError):
    """A set of vectors does not span a genuine p-plane."""


class NumericalBreakdownError(GBCError, ArithmeticError):
    """Loss of positive-definiteness or a stencil leaving the chart domain."""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None):
        if point is not None:
            message = f"{message} (at point {list(map(float, point))})"
        super().__init__(message)
        self.point = None if point is None else [float(v) for v in point]


class ManifestError(GBCError, ValueError):
    """Manifest validation failed; `errors` holds every message."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors) if self.errors else "invalid manifest")
