"""Exception types shared across the package."""


class CubicalError(Exception):
    """Base class for all package errors."""


class DegenerateCubeError(CubicalError, ValueError):
    pass


class DimensionMismatchError(CubicalError, ValueError):
    pass


class ClosureError(CubicalError, ValueError):
    """A cube is present without one of its faces."""


class TorsionAlarm(CubicalError):
    """GF(2) and rational Betti numbers disagree."""


class MissingValueError(CubicalError, KeyError):
    pass


class OutOfRegionError(CubicalError, ValueError):
    pass


class InvalidModelError(CubicalError, ValueError):
    pass


class NonProductModelError(InvalidModelError):
    pass


class PlanError(CubicalError, ValueError):
    """Raised for an experiment plan that cannot be run."""


class PropertyViolation(CubicalError, AssertionError):
    """A checked inequality or invariant failed on a concrete input."""
