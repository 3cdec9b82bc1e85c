"""Exception types shared across the package."""


class EqunfoldError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(EqunfoldError):
    """Inconsistent shapes, mismatched groups, or invalid table data."""


class RootFindingError(EqunfoldError):
    """Characteristic-root iteration failed to converge.

    Carries the last iterate and its residual so callers can reseed.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class FrameError(EqunfoldError):
    """Eigenbasis construction failed (defective spectrum, bad seeds, ...)."""


class UnfoldingError(EqunfoldError):
    """Unfolding machinery failed (rank deficiency, infeasible mask, ...)."""


class SchemaError(EqunfoldError):
    """A JSON document does not conform to the expected schema."""
