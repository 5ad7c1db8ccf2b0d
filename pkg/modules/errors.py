"""
Exceptions raised by the approximation modules.

Every class derives from ApproximationError and also from the builtin that
best describes it, so callers may catch ``ValueError`` or ``ArithmeticError``
without importing this module. The cli maps the families onto exit codes:

    ConfigError, PreconditionError, FitError  -> 1
    NumericGuardError and subclasses          -> 2
    ArtifactIOError                           -> 3
"""


class ApproximationError(Exception):
    """Base class of every error raised by this package"""


class PreconditionError(ApproximationError, ValueError):
    """An argument violates the documented precondition of an operation"""


class DomainError(PreconditionError):
    """Non-finite input handed to an activation"""


class ConfigError(ApproximationError, ValueError):
    """
    Invalid experiment configuration

    field : dotted path of the offending field, e.g. "quadrature.panels"
    line  : line number in the config file when the error is a syntax error
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        location = []
        if line is not None:
            location.append("line %i" % line)
        if field is not None:
            location.append("field %s" % field)
        if location:
            message = "%s: %s" % (", ".join(location), message)
        super().__init__(message)


class FitError(ApproximationError, ValueError):
    """Not enough usable points for a convergence-rate fit"""


class NumericGuardError(ApproximationError, ArithmeticError):
    """A numeric guard refused to continue rather than return noise"""


class DegenerateMeasureError(NumericGuardError):
    """A coefficient denominator is zero or below the relative threshold"""

    def __init__(self, message: str, index: tuple[int, ...] | None = None):
        self.index = index
        super().__init__(message)


class MeasureIntegrityError(NumericGuardError):
    """A density took a negative value at a quadrature node"""


class ResourceGuardError(NumericGuardError):
    """A size budget would be exceeded"""


class ArtifactIOError(ApproximationError, OSError):
    """Writing or reading an artifact failed; the message names the path"""
