"""Exception hierarchy shared across the package."""


class GBLError(Exception):
    """Base class for all package errors."""


class ValidationError(GBLError, ValueError):
    """An input failed a symmetry, definiteness or range check."""


class DimensionError(ValidationError):
    """Two inputs have inconsistent shapes."""


class InfeasibleError(GBLError):
    """The constraint set has no point satisfying every row.

    ``row`` is the index of the constraint that certified infeasibility and
    ``label`` its human-readable tag, when known.
    """

    def __init__(self, message, row=None, label=None):
        super().__init__(message)
        self.row = row
        self.label = label


class PinnedInfeasibleError(InfeasibleError):
    """A rank-deficient metric pins coordinates to values outside the set."""
