"""Exception types shared across the package."""

from __future__ import annotations


class GinibreLabError(Exception):
    """Base class for all package errors."""


class DomainError(GinibreLabError, ValueError):
    """An argument lies outside the range where a formula is defined."""


class NoConvergence(GinibreLabError, ArithmeticError):
    """An iterative solver failed to reach its residual tolerance."""


class RegimeError(GinibreLabError, ValueError):
    """An asymptotic formula was requested outside its validity regime."""


class MaxSubdivisions(GinibreLabError, ArithmeticError):
    """Adaptive quadrature ran out of subdivisions before meeting tolerance."""


class ContourCrossesPole(GinibreLabError, ValueError):
    """A constructed contour passes too close to a singular point."""


class UnknownIndex(GinibreLabError, KeyError):
    """Requested polynomial index triple is not in the table."""


class EmptySample(GinibreLabError, ValueError):
    """A statistic was requested on an empty sample."""


class LinAlgFailure(GinibreLabError, ArithmeticError):
    """A sampled matrix could not be decomposed after all retries."""


class TruncationWarning(UserWarning):
    """A truncated ray still carries integrand mass above the tolerance."""


class TauEndpointWarning(UserWarning):
    """The inner endpoint integration needed more refinement than allowed."""
