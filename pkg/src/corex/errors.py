"""Exception types raised by the corex package.

Every error raised on a documented failure path derives from CorexError so
callers can catch the package's failures with a single except clause.
"""


class CorexError(Exception):
    """Base class for all corex errors."""


class DuplicateId(CorexError):
    """Two samples (or two grids within a sample) share an id."""


class IoError(CorexError):
    """A file could not be read or written."""


class FormatError(CorexError):
    """A file exists but its content violates the on-disk format."""


class UnknownConcept(CorexError):
    """A concept id was requested that no sample provides."""


class UnknownSample(CorexError):
    """A sample id was requested that the dataset does not contain."""


class InconsistentTheory(CorexError):
    """A theory references concepts outside the filtered concept set."""


class Disconnected(CorexError):
    """A mask passed to boundary tracing has more than one component."""


class DimensionMismatch(CorexError):
    """Two masks or grids that must share dimensions do not."""


class InstanceMismatch(CorexError):
    """Surrounding was asked about two regions of different concepts."""


class RenderError(CorexError):
    """A knowledge base cannot be rendered to clause text."""


class ParseError(CorexError):
    """Clause text could not be parsed.

    Carries the 1-based line and column of the first offending character.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + location)
        self.line = line
        self.column = column


class EmptyPositives(CorexError):
    """Induction was started with no positive examples."""


class InvalidInput(CorexError):
    """An analysis routine received malformed input."""


class InvalidClause(CorexError):
    """A clause index is out of range for the theory."""


class OracleError(CorexError):
    """A model oracle failed while re-labelling masked samples."""


class ConfigError(CorexError):
    """A generator or pipeline configuration is unsatisfiable."""
