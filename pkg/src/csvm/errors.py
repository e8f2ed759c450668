"""Exception hierarchy shared across the package."""


class CsvmError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(CsvmError, ValueError):
    """An argument violates a documented precondition."""


class NumericalError(CsvmError, ArithmeticError):
    """A numerical precondition failed (e.g. an indefinite Gram matrix)."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class InfeasibleError(CsvmError):
    """The requested non-coverage targets cannot be met."""


class TrainingError(CsvmError):
    """Training could not produce a model."""


class SchemaError(CsvmError):
    """A file does not follow the expected schema."""


class MissingColumnsError(SchemaError):
    """A dataset file lacks required columns."""


class DimensionError(CsvmError, ValueError):
    """Feature dimensions of two inputs do not agree."""
