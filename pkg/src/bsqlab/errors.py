"""Exception types shared across the package.

Exit-code mapping used by the CLI: ConfigurationError -> 2,
CheckFailure -> 1, NumericalError (and subclasses) -> 3.
"""


class BsqlabError(Exception):
    """Base class for package errors."""


class ConfigurationError(BsqlabError):
    """Invalid grid/config parameters (unknown key, bad type, range)."""


class GridMismatchError(BsqlabError):
    """Operands live on different grids."""


class NumericalError(BsqlabError):
    """Runtime numerical failure (nonfinite values, singular formula)."""


class DomainError(NumericalError):
    """Formula evaluated outside its mathematical domain."""


class ContractionError(NumericalError):
    """Fixed-point inversion did not contract.

    Carries the measured contraction factor so callers can report how far
    the amplitude threshold was exceeded.
    """

    def __init__(self, message: str, contraction_factor: float):
        super().__init__(message)
        self.contraction_factor = contraction_factor


class CheckFailure(BsqlabError):
    """An invariant check failed (used by the verify command)."""


class UnusableInputError(BsqlabError):
    """Input lacks required data (e.g. trajectory without state dumps)."""
