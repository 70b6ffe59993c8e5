"""Exception types raised across the package."""


class GfsError(Exception):
    """Base class for all package errors."""


class NumericInputError(GfsError, ValueError):
    pass


class SymmetryError(GfsError, ValueError):
    pass


class ShapeError(GfsError, ValueError):
    pass


class GeometryError(GfsError, ValueError):
    pass


class FormatError(GfsError, ValueError):
    pass


class ConfigError(GfsError, ValueError):
    pass


class SingularityError(GfsError, ArithmeticError):
    pass


class InputError(GfsError, ValueError):
    pass


class ParseError(GfsError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConsistencyError(GfsError, ValueError):
    pass


class SpecError(GfsError, ValueError):
    pass


class SequenceIOError(GfsError, OSError):
    pass


class DivergenceError(GfsError, RuntimeError):
    """ADMM objective kept increasing; ``trace`` holds the objective history."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = list(trace)
