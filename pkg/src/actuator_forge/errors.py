"""Exception hierarchy shared across the package.

Validation errors signal bad inputs (CLI exit code 1); numerical errors signal
a computation that could not meet its accuracy contract (CLI exit code 2).
"""


class ValidationError(ValueError):
    """An argument violates a documented precondition."""


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""


class PrecisionError(NumericalError):
    """Extended-precision linear algebra did not reach the required residual."""


class DegenerateCombinationError(NumericalError):
    """A level-set sweep hit a plateau; the mode combination is degenerate."""


class UncontrollableModeError(ValidationError):
    """A mode with a nonzero coefficient has vanishing mass on the domain."""
