"""Exception hierarchy shared by all phasemog modules."""


class PhasemogError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(PhasemogError, ValueError):
    """Caller supplied data that violates a precondition (CLI exit code 2)."""


class NumericalError(PhasemogError, ArithmeticError):
    """A numerical procedure failed, e.g. a factorization of a bad matrix
    (CLI exit code 3)."""


class ConsistencyError(PhasemogError, RuntimeError):
    """Internal invariant violated; indicates a bug, not bad input."""
