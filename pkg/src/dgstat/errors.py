"""Exception types shared across the package."""


class DGStatError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DGStatError, ValueError):
    """Invalid user-facing configuration (degree, flux kind, config keys...)."""


class StateError(DGStatError, ArithmeticError):
    """Non-physical Euler state (rho <= 0 or p <= 0).

    ``index`` is the array index of the first offending state, which for
    solver-side evaluations starts with the cell index ``(i, j)``.
    """

    def __init__(self, message, index=None):
        super().__init__(message if index is None else f"{message} at index {index}")
        self.index = index


class NumericalError(DGStatError, ArithmeticError):
    """Failed linear algebra, blow-up, or an ambiguous numerical decision."""


class IndexSetError(NumericalError):
    """Index set does not select the kernel (restricted basis is singular)."""
