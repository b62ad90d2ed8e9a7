"""Exception hierarchy shared across the lab.

Argument problems map to CLI exit code 2, numeric/construction failures to 3.
"""


class LabError(Exception):
    """Base class for all errors raised by npmle_lab."""

    exit_code = 3


class ArgumentError(LabError, ValueError):
    exit_code = 2


class DataError(LabError, ValueError):
    """Input data violates a domain invariant (off-simplex vectors, non-finite values)."""


class ParseError(LabError, ValueError):
    exit_code = 2

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(LabError, ArithmeticError):
    pass


class ConstructionError(LabError):
    pass


class TrainingError(LabError):
    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class DegenerateModelError(LabError):
    pass


class PackingNotFoundError(ConstructionError):
    pass


class AssumptionViolation(LabError):
    """A candidate approximant vanishes where the truth does not.

    ``where`` holds (x, k) pairs for the offending probe points.
    """

    def __init__(self, message, where=()):
        self.where = list(where)
        super().__init__(message)
