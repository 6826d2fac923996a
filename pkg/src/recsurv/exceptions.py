"""Exception hierarchy.

Validation problems with input data derive from :class:`DataValidationError`;
failures of an iterative fit derive from :class:`NumericalError`. The CLI maps
the two families onto distinct exit codes.
"""


class RecsurvError(Exception):
    """Base class for all package errors."""


class DataValidationError(RecsurvError, ValueError):
    """Input data violates the record-spell schema or an operation precondition."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(RecsurvError, ArithmeticError):
    """A fit could not produce a usable estimate."""


class SingularMatrixError(NumericalError):
    pass


class MonotoneLikelihoodError(NumericalError):
    """A coefficient diverges because a covariate separates the outcomes."""

    def __init__(self, message, coefficient_index=None):
        super().__init__(message)
        self.coefficient_index = coefficient_index


class ConvergenceError(NumericalError):
    pass
