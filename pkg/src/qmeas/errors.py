"""Exception hierarchy used across the package."""


class QMeasError(Exception):
    """Base class for all package errors."""


class DimensionError(QMeasError, ValueError):
    """Shapes or dimensions of inputs do not match."""


class NumericError(QMeasError, ArithmeticError):
    """A numerical routine failed or produced an out-of-tolerance result."""


class NotPSDError(NumericError):
    """Matrix expected to be positive semidefinite has a negative eigenvalue."""


class InvalidMeasurementError(QMeasError, ValueError):
    """Operators do not form a complete measurement."""


class ImpossibleOutcomeError(QMeasError, ValueError):
    """The requested outcome or branch has zero probability."""


class NoSuccessBranchError(QMeasError, ValueError):
    """The outcome has no success branch, so it cannot be reversed."""


class RangeError(QMeasError, ValueError):
    """An information content lies outside its admissible range."""


class ModelError(QMeasError, ValueError):
    """An error model produced an invalid density operator or density."""
