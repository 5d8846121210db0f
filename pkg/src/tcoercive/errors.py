"""Exception hierarchy shared by all modules."""


class TCoerciveError(Exception):
    """Base class for every error raised by this package."""


class NumericalError(TCoerciveError):
    """A numerical procedure failed (mapped to CLI exit code 2)."""


class ValidationError(TCoerciveError, ValueError):
    """Invalid user input (mapped to CLI exit code 1).

    ``path`` names the offending configuration field when known.
    """

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class ParseError(ValidationError):
    pass


class BadParameters(ValidationError):
    pass


class InvalidDelta(ValidationError):
    pass


class ContrastTooSmall(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class OutOfTube(NumericalError, ValueError):
    """A point lies outside the tubular neighbourhood of a patch."""


class LocateFailure(NumericalError):
    """A point could not be located in the mesh."""


# short alias used by the mesh module
NotFound = LocateFailure


class SingularMatrix(NumericalError):
    pass


class AtPole(NumericalError, ValueError):
    pass


class ContourThroughEigenvalue(NumericalError):
    pass


class RankAmbiguity(NumericalError):
    pass


class IoError(TCoerciveError):
    """Reading or writing an output file failed (CLI exit code 1)."""
