"""Exception hierarchy shared by all modules."""


class NLCSError(Exception):
    """Base class for every error raised by this package."""


class DomainError(NLCSError, ValueError):
    """An amplitude or parameter lies outside the admissible domain."""


class TruncationError(NLCSError):
    """The Fock-space truncation cap was reached before the series converged."""


class ConvergenceError(NLCSError, ArithmeticError):
    """A numerical series (e.g. the matrix exponential) failed to converge."""


class SingularNonlinearityError(NLCSError, ZeroDivisionError):
    """A nonlinearity function hits a zero denominator at some level ``n``."""

    def __init__(self, n, message=None):
        self.n = n
        super().__init__(message or f"nonlinearity is singular at n={n}")
