"""Exception hierarchy shared by every smfret module.

Each class carries a stable ``exit_code`` used by the command-line driver.
"""


class FretError(Exception):
    """Base class for all smfret errors."""

    exit_code = 1


# -- construction / parameters ---------------------------------------------

class LengthMismatch(FretError, ValueError):
    exit_code = 10


class NegativeCount(FretError, ValueError):
    exit_code = 11


class EmptyTrace(FretError, ValueError):
    exit_code = 12


class NegativeParameter(FretError, ValueError):
    exit_code = 13


class FractionOutOfRange(FretError, ValueError):
    exit_code = 14


# -- analysis ----------------------------------------------------------------

class ZeroTotal(FretError, ZeroDivisionError):
    """Burst has no photons to weight; efficiency is undefined."""

    exit_code = 20


class NonPositiveDistance(FretError, ValueError):
    exit_code = 21


class BadBinning(FretError, ValueError):
    exit_code = 22


class DegenerateData(FretError, ValueError):
    exit_code = 23


class EmptyInput(FretError, ValueError):
    exit_code = 24


class OutOfDomainPoint(FretError, ValueError):
    exit_code = 25


class NoConvergenceWarning(UserWarning):
    """Issued when an iterative fit stops without meeting its tolerance."""


# -- io ----------------------------------------------------------------------

class FileNotFound(FretError, FileNotFoundError):
    exit_code = 30


class MalformedRow(FretError, ValueError):
    """A data row could not be parsed.

    ``path`` and ``line`` locate the offending row (1-based line number).
    """

    exit_code = 31

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        if path is not None:
            message = f"{path}:{line}: {message}"
        super().__init__(message)


class MixedMode(MalformedRow):
    """File column count belongs to the other acquisition mode."""

    exit_code = 32


class UnknownKey(FretError, KeyError):
    exit_code = 33

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class MissingRequiredKey(FretError, KeyError):
    exit_code = 34

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ValueOutOfDomain(FretError, ValueError):
    exit_code = 35


class WriteFailed(FretError, OSError):
    exit_code = 36
