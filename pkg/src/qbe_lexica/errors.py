"""Exception hierarchy shared across the engine.

Everything raised on bad data or bad configuration derives from
``EngineError`` so the CLI can map it to a single exit code.
"""


class EngineError(Exception):
    """Base class for all data / configuration errors raised by the engine."""


class ParseError(EngineError):
    """A file could not be parsed; carries the path and 1-based line number."""

    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class ValidationError(EngineError):
    """An invariant on loaded or computed data does not hold."""


class ConflictError(ValidationError):
    """A uniqueness constraint was violated (duplicate identifier)."""


class RangeError(ValidationError):
    """A numeric field is outside its allowed range."""


class NotFoundError(EngineError):
    """A referenced document or query does not exist."""


class AlignmentError(EngineError):
    """Two per-query structures do not cover the same items."""


class FormatError(EngineError):
    """A persisted artifact has the wrong header, version, or framing."""


class ConfigError(EngineError):
    """An analyzer or scorer configuration is invalid or unusable."""
