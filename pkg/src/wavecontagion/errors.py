"""Exception hierarchy shared by the library and the CLI."""


class WaveContagionError(Exception):
    """Base class for all package errors."""


class DataError(WaveContagionError, ValueError):
    """Input data is malformed, inconsistent or insufficient."""


class NumericError(WaveContagionError, ArithmeticError):
    """A computation is undefined for the given input (e.g. zero variance)."""
