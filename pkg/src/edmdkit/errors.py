"""Exception types shared across the package."""


class EdmdError(Exception):
    """Base class for all package errors."""


class InputShapeError(EdmdError, ValueError):
    """An array argument has the wrong shape or dimension."""


class DataValidationError(EdmdError, ValueError):
    """Input data violates a contract (non-finite entries, broken invariant)."""


class ConfigurationError(EdmdError, ValueError):
    """A spec/config object is empty, inconsistent, or out of range."""


class MissingOutputError(EdmdError, ValueError):
    """An operation needs output data (Y or Y+) that the input does not carry."""


class SingularSystemError(EdmdError):
    """A direct solve hit a singular system; remediation is in the message."""


class DivergenceError(EdmdError):
    """A simulated trajectory left the representable range."""


class CsvFormatError(EdmdError, ValueError):
    """Snapshot CSV does not match the schema. Carries line/column context."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class ModelFormatError(EdmdError, ValueError):
    """Model JSON does not match the schema. Carries the JSON path of the failure."""

    def __init__(self, message, json_path=None):
        self.json_path = json_path
        where = f" at {json_path}" if json_path else ""
        super().__init__(message + where)
