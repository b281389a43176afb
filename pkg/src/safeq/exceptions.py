"""Exception hierarchy shared by every safeq module."""


class SafeQError(Exception):
    """Base class for all errors raised by safeq."""


class DimensionMismatch(SafeQError, ValueError):
    pass


class SingularMatrix(SafeQError, ArithmeticError):
    pass


class NotSymmetric(SafeQError, ValueError):
    pass


class NotStabilizable(SafeQError):
    pass


class NoConvergence(SafeQError):
    pass


class OutsideInterior(SafeQError, ValueError):
    """The state is not in the strict interior of the safe set."""


class UndefinedAtOrigin(SafeQError, ValueError):
    pass


class NegativeArgument(SafeQError, ValueError):
    pass


class NotWarmedUp(SafeQError):
    """The integral window does not yet span a full interval."""


class SafetyBreach(SafeQError):
    """The state left the safe set during an episode."""

    def __init__(self, t, x, message=None):
        self.t = t
        self.x = x
        super().__init__(message or f"safe set left at t={t:.6g}")


class NumericalDivergence(SafeQError, ArithmeticError):
    pass


class ParseError(SafeQError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantViolation(SafeQError, ValueError):
    def __init__(self, invariant, message=None):
        self.invariant = invariant
        super().__init__(message or f"invariant violated: {invariant}")


class IoError(SafeQError, OSError):
    """A log or summary file could not be written."""
