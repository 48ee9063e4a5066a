"""Exception types shared across the toolkit."""


class ScreenkitError(Exception):
    """Base class for all toolkit-specific errors."""


class SingularMatrixError(ScreenkitError):
    """Model matrix is rank deficient; message names the dependent columns."""

    def __init__(self, message: str, dependent_columns: tuple[str, ...] = ()):
        super().__init__(message)
        self.dependent_columns = dependent_columns


class ResourceLimitError(ScreenkitError):
    """Requested construction would exceed a hard size guard."""


class InvalidGeneratorError(ScreenkitError):
    """Defining words are dependent or otherwise unusable."""


class ConstructionError(ScreenkitError):
    """A design construction is unavailable or failed its own checks."""


class InfeasibleError(ScreenkitError):
    """Linear program has no feasible point."""


class IterationLimitError(ScreenkitError):
    """Iterative solver hit its iteration guard without terminating."""


class ConditioningError(ScreenkitError):
    """Matrix factorization failed even after regularization escalation."""


class CorruptPlanError(ScreenkitError):
    """A trajectory plan violates its one-coordinate-step structure."""
