"""Exception hierarchy shared by the library and the command line front end."""


class AdkrylovError(Exception):
    """Base class for all errors raised by adkrylov."""


class ComparisonError(AdkrylovError, ValueError):
    """Two scalars are unordered because a primal part is NaN."""


class DomainError(AdkrylovError, ValueError):
    """A scalar function was evaluated outside its domain."""


class DimensionError(AdkrylovError, ValueError):
    """Operand shapes do not agree."""


class MatrixMarketError(AdkrylovError, ValueError):
    """Malformed Matrix Market input.

    ``lineno`` is the 1-based line of the offending input, when known.
    """

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class UnsupportedFormatError(MatrixMarketError):
    """The Matrix Market header names a format this package does not read."""

    def __init__(self, token, lineno=1):
        super().__init__(f"unsupported Matrix Market format token {token!r}", lineno)
        self.token = token


class SingularMatrixError(AdkrylovError, ArithmeticError):
    """The dense oracle found the matrix singular to working precision."""


class SizeError(AdkrylovError, ValueError):
    """The matrix is too large for a dense oracle."""


class UsageError(AdkrylovError, ValueError):
    """Invalid combination of arguments."""


class FetchError(AdkrylovError):
    """Downloading a matrix failed. ``status`` holds the HTTP status, if any."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class ArchiveFormatError(FetchError):
    """The downloaded archive does not contain the expected ``.mtx`` member."""


class CacheConflictWarning(UserWarning):
    """A re-download differs from the file already in the cache."""


class CsvFormatError(AdkrylovError, ValueError):
    """A trace or profile CSV does not follow the expected schema."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
