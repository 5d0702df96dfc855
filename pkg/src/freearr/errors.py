"""Exception types raised by the arrangement toolkit."""


class ArrangementError(Exception):
    """Base class for all errors raised by :mod:`freearr`."""


class InvalidHyperplane(ArrangementError):
    pass


class NotMember(ArrangementError):
    """A hyperplane was expected to belong to an arrangement but does not."""


class NotAFlat(ArrangementError):
    pass


class DimensionMismatch(ArrangementError):
    pass


class OracleTooLarge(ArrangementError):
    pass


class InvalidShapes(ArrangementError):
    pass


class PreconditionViolated(ArrangementError):
    pass


class ParseError(ArrangementError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CertificateError(ArrangementError):
    """Raised when a certificate is syntactically malformed."""
