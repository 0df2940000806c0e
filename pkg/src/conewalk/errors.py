"""Exception hierarchy."""


class ConewalkError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ConewalkError, ValueError):
    """Input outside the mathematical domain of an operation."""


class UsageError(ConewalkError, ValueError):
    """Malformed call: wrong dimensions, out-of-range indices."""


class UnsupportedError(ConewalkError):
    """The request is well-formed but beyond what is implemented or affordable."""


class PreconditionError(ConewalkError, ValueError):
    """A stated precondition (e.g. an isotropy bound) does not hold."""


class InconsistencyError(ConewalkError):
    """Parameters contradict each other (e.g. no residual mass to sample)."""


class EmptyReportError(ConewalkError):
    """A filter or census selected nothing to report on."""


class ParseError(ConewalkError):
    """Scenario file could not be parsed; carries the file location."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
