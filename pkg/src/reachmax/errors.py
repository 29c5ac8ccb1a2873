"""Exception hierarchy shared across the package."""


class ReachmaxError(Exception):
    """Base class for all package errors."""


class SingularMatrix(ReachmaxError, ArithmeticError):
    """A pivot fell below the singularity threshold.

    For chain systems this means some transient state cannot reach
    absorption under the assembled transition table.
    """

    def __init__(self, message, pivot=None, index=None):
        super().__init__(message)
        self.pivot = pivot
        self.index = index


class InvalidGraph(ReachmaxError, ValueError):
    pass


class ParseError(ReachmaxError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DuplicateEdge(ParseError):
    pass


class ChainValidationError(ReachmaxError, ValueError):
    """Raised when a chain is used in a context that requires it to be valid."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class CombinatorialLimit(ReachmaxError, ValueError):
    pass


class NonConvergence(ReachmaxError, RuntimeError):
    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class LazyBoundViolation(ReachmaxError, AssertionError):
    """Audit mode found a lazy-greedy acceptance that a full scan disagrees with."""
