"""Exception types shared across the package."""


class StructuralError(ValueError):
    """Shapes, sizes or labels of the inputs do not fit together."""


class DomainError(ValueError):
    """A value is outside the mathematical domain of the operation."""


class HypothesisViolationError(ValueError):
    """A hypothesis required by a theorem or comparison chain fails.

    Carries an optional ``witness`` (state index, function, or time step)
    pinpointing where the hypothesis breaks.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class UnsupportedNormError(ValueError):
    """The requested (p, q) operator norm is not in the supported set."""


class ResourceLimitError(ValueError):
    """A generator would exceed its configured state-count cap."""
