"""Exception hierarchy shared by the library and the CLI."""


class SolsError(Exception):
    """Base class for every error raised by :mod:`solsoliton`."""


class InputError(SolsError):
    """Bad user input; the CLI maps these to exit code 2."""


class DimensionMismatch(InputError, ValueError):
    pass


class SingularMap(InputError, ValueError):
    pass


class NotSolvable(InputError):
    pass


class NotLieAlgebra(InputError):
    pass


class ZeroBracket(InputError, ValueError):
    pass


class NotNilpotent(InputError):
    pass


class BadSplitting(InputError):
    pass


class PreconditionFailed(SolsError):
    def __init__(self, failed, message=None):
        self.failed = list(failed)
        super().__init__(message or "precondition failed: " + ", ".join(self.failed))


class NotNilsoliton(InputError):
    pass


class NotSymmetric(InputError):
    pass


class NotCommuting(InputError):
    pass


class NotDerivation(InputError):
    pass


class DegenerateMetric(InputError):
    pass


class GateFailed(SolsError):
    pass


class ReportedUngated(SolsError):
    """No candidate frame achieved the gate condition.

    ``report`` carries the identities evaluated in the fallback frame.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MaxIterExceeded(SolsError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ParamOutOfRange(InputError, ValueError):
    pass


class UnsupportedEntry(InputError, KeyError):
    pass


class ParseError(InputError, ValueError):
    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class InvalidGram(InputError, ValueError):
    pass


class SplittingMismatch(InputError):
    pass
