"""Exception types shared across the toolkit."""


class CircleDimError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(CircleDimError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class InvalidFamilyError(CircleDimError):
    """Map parameters leave the orientation-preserving homeomorphism class."""


class PrecisionError(CircleDimError):
    """The requested computation does not fit the precision budget.

    Carries a suggestion for how many bits would be needed.
    """

    def __init__(self, message: str, suggested_bits: int | None = None):
        super().__init__(message)
        self.suggested_bits = suggested_bits


class AmbiguousComparisonError(CircleDimError):
    """Two quantities are closer than the propagated error bound.

    Raised instead of guessing; a wrong partial quotient would silently
    corrupt every downstream partition.
    """


class DomainError(CircleDimError):
    """Evaluation requested at a point where the quantity is undefined."""


class GeometryError(CircleDimError):
    """A constructed partition fails a tiling or containment check."""


class TuningError(CircleDimError):
    """Parameter tuning did not converge; carries the best bracket found."""

    def __init__(self, message: str, bracket=None):
        super().__init__(message)
        self.bracket = bracket
