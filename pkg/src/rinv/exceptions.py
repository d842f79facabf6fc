"""Exception types raised by the library and mapped to CLI exit codes."""


class RinvError(Exception):
    """Base class for library errors."""


class ConvergenceError(RinvError):
    """An iterative kernel (eigen-solve, root iteration) failed to converge.

    ``best`` carries the last iterate when one is available.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InfeasibleSolveError(RinvError):
    """The right-hand side has a component outside the range of the constraint map."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ProblemFileError(RinvError):
    """Malformed problem file; ``line`` points at the offending location if known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
