"""Exception hierarchy shared by every module of the package."""


class InverseSetError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(InverseSetError, ValueError):
    pass


class NonFiniteInput(InverseSetError, ValueError):
    pass


class NonFiniteValue(InverseSetError, ArithmeticError):
    pass


class SchemaViolation(InverseSetError, ValueError):
    pass


class UnsupportedKind(SchemaViolation):
    pass


class DegenerateBand(InverseSetError, ValueError):
    pass


class BandOutsideLogisticRange(InverseSetError, ValueError):
    pass


class MaxOuterIterationsExceeded(InverseSetError, RuntimeError):
    """Raised when the seed solver never reaches full feasibility.

    ``best`` holds the state with the largest feasible count seen, and
    ``result`` a :class:`~inverseset.auglag.SeedResult` built from it (its
    seeds are *not* all feasible).
    """

    def __init__(self, message, best=None, result=None):
        super().__init__(message)
        self.best = best
        self.result = result


class WalkBudgetExhausted(InverseSetError, RuntimeError):
    """Raised when the walk cannot accept ``n`` samples in time; ``partial``
    carries the samples accepted so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class TooFewSamples(InverseSetError, ValueError):
    pass


class EmptySet(InverseSetError, ValueError):
    pass


class UnsupportedDimension(InverseSetError, ValueError):
    pass


class ConfigInvalid(InverseSetError, ValueError):
    pass


class ModelLoadError(InverseSetError, OSError):
    pass


class FingerprintMismatch(InverseSetError, ValueError):
    pass


class MissingArtifacts(InverseSetError, FileNotFoundError):
    pass
