"""Exception hierarchy shared by all dislog modules."""


class DislogError(Exception):
    """Base class for library errors."""


class DomainError(DislogError, ValueError):
    """An argument lies outside the domain of the operation."""


class KernelSingularityError(DomainError):
    """The kernel derivative is unbounded at the requested point."""


class QuadratureError(DislogError, ArithmeticError):
    """Numerical integration failed to reach the requested tolerance."""

    def __init__(self, message, *, estimate=None, abserr=None):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class MomentDivergenceError(DislogError, ArithmeticError):
    """A series (moment, information) does not converge; the quantity may not exist."""


class FitInfeasibleError(DislogError, ArithmeticError):
    """The likelihood is zero at an observed point for the requested parameters."""


class DataError(DislogError, ValueError):
    """Malformed or inconsistent input data."""

    def __init__(self, message, *, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
