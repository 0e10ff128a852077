"""Exception taxonomy shared by every module in the package.

All errors derive from :class:`OodScreenError` so callers can catch a single
base class. The command-line layer relies on the split below to choose exit
codes: file and input problems are distinct from degenerate computations.
"""


class OodScreenError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(OodScreenError):
    """An input violates a basic precondition (non-finite, wrong domain, ...)."""


class InvalidThreshold(OodScreenError):
    """An activation cap is not a positive finite real."""


class InvalidTemperature(OodScreenError):
    """A temperature is not a positive finite real."""


class DimensionError(OodScreenError):
    """Shapes of features, head, or identifier lists do not line up."""


class EmptyInput(OodScreenError):
    """An operation that needs at least one element received none."""


class CalibrationError(OodScreenError):
    """Calibration produced an unusable threshold (e.g. a non-positive cap)."""


class DuplicateId(OodScreenError):
    """Sample identifiers must be unique within a batch or file."""


class IdSetMismatch(OodScreenError):
    """Tables that must cover the same set of samples do not."""


class DegenerateLabels(OodScreenError):
    """Rank metrics need at least one positive and one negative label."""


class DegenerateMarginals(OodScreenError):
    """Chance-corrected agreement is undefined when expected agreement is 1."""


class FormatError(OodScreenError):
    """A file does not conform to its declared layout."""


class TruncationError(FormatError):
    """A binary file ended before its declared content."""


class SchemaError(FormatError):
    """A structured document has missing or unknown keys, or wrong value types."""


class ParseError(FormatError):
    """A table cell could not be interpreted.

    Carries optional ``row`` (1-based, excluding the header) and ``column``
    context so tooling can point at the offending cell.
    """

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        if row is not None:
            location = f"row {row}" + (f", column {column!r}" if column else "")
            message = f"{location}: {message}"
        super().__init__(message)
        self.row = row
        self.column = column
