"""Exception types shared across the package."""


class ReducedRipsError(Exception):
    """Base class for all package errors."""


class DuplicatePointError(ReducedRipsError):
    """Two input points are coordinate-identical."""


class DegenerateInputError(ReducedRipsError):
    """Input violates a precondition of the persistence computation."""


class InvalidSpecError(ReducedRipsError):
    """A generator specification is malformed."""


class ParseError(ReducedRipsError):
    """A point-cloud file could not be parsed.

    Carries the 1-based line number of the offending row.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CapExceededError(ReducedRipsError):
    """A brute-force reference routine was asked to exceed its size cap."""


class ResourceLimitError(ReducedRipsError):
    """The configured memory ceiling was exceeded."""


class InternalInvariantError(ReducedRipsError):
    """An internal invariant failed; indicates a bug, not bad input."""
