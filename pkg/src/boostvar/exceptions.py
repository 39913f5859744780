"""Exception types shared across the package."""


class BoostvarError(Exception):
    """Base class for all package errors."""


class DataError(BoostvarError):
    """Invalid or unusable input data (wrong shape, NaN/Inf, bad CSV cell)."""


class NumericalError(BoostvarError):
    """A numerical routine failed (eigen-solver non-convergence, degenerate design)."""
