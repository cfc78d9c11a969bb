"""Exception types shared across the package."""


class OrliczLabError(Exception):
    """Base class for all package errors."""


class NonConvergence(OrliczLabError):
    """Adaptive quadrature did not reach tolerance within its budget."""


class EmptyRegion(OrliczLabError):
    """An integration region contains no grid cell."""


class BadRadiusPolicy(OrliczLabError):
    """A radius / dilation list is empty or contains non-positive entries."""


class DomainTooSmall(OrliczLabError):
    """The sampled domain does not contain the region a check needs."""


class GridTooCoarse(OrliczLabError):
    """The grid cannot resolve the requested support width."""


class InvalidInput(OrliczLabError):
    """Malformed user input (function specs, CSV files, config values)."""
