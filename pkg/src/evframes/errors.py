"""Exception types shared across the package."""


class EvframesError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(EvframesError, ValueError):
    """An argument violates a documented precondition."""


class SchemaError(EvframesError, ValueError):
    """A label is not part of the active label schema."""


class FormatError(EvframesError, ValueError):
    """A data file does not follow the documented format."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(EvframesError, ValueError):
    """A configuration value is inconsistent or out of range."""


class AlignmentError(EvframesError, ValueError):
    """Prediction and gold files do not cover the same sentence ids."""


class CheckpointError(EvframesError, RuntimeError):
    """A checkpoint cannot be loaded or is version-incompatible."""
