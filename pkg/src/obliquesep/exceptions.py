"""Exception types raised by obliquesep."""


class ObliqueSepError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ObliqueSepError, ValueError):
    pass


class GridMismatchError(ObliqueSepError, ValueError):
    """Two functions (or sets of functions) live on different grids."""


class DimensionMismatchError(ObliqueSepError, ValueError):
    pass


class DegenerateInputError(ObliqueSepError, ValueError):
    """Input has no numerically significant content (zero Gram matrix, zero denominator)."""


class ExhaustedError(ObliqueSepError):
    """Every normal equation has already been selected as a constraint."""


class SingularSystemError(ObliqueSepError, ArithmeticError):
    """The weighted constraint matrix collapsed to zero during FOCUSS."""
