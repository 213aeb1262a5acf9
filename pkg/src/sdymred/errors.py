"""Exception types raised by the residual operators and solvers."""


class ReductionError(Exception):
    """Base class for all package errors."""


class NonZeroMean(ReductionError, ValueError):
    """Inverse x-derivative requested for data with a nonzero x-mean."""


class ShapeMismatch(ReductionError, ValueError):
    pass


class MissingTimeStack(ReductionError, ValueError):
    """A time derivative was requested but no time stack (or step) was given."""


class SingularMetric(ReductionError, ValueError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class CurvatureObstruction(ReductionError, ValueError):
    """Frame transport refused: the coefficients fail the zero-curvature test."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PoleAtLambda(ReductionError, ValueError):
    pass


class ConstraintViolated(ReductionError, ValueError):
    pass


class DivisionBySmallK(ReductionError, ValueError):
    pass


class NonUnitSpin(ReductionError, ValueError):
    pass


class NonOrthogonalGauge(ReductionError, ValueError):
    pass


class SingularGauge(ReductionError, ValueError):
    pass


class BlowUp(ReductionError, RuntimeError):
    """Solver state exceeded the blow-up threshold; ``partial`` holds the stack so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class UnknownName(ReductionError, KeyError):
    pass


class StructureMismatch(ReductionError, ValueError):
    """A gauge-changed matrix does not fit the spin pattern (reported, not raised)."""
