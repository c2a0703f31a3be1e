"""Exception types shared across the package.

Every error raised by the public API derives from SeqforgeError; the class
name doubles as the machine-greppable error code printed by the CLI.
"""


class SeqforgeError(Exception):
    """Base class for all seqforge errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- corpus ---------------------------------------------------------------

class SpanCrossesToken(SeqforgeError):
    """A span boundary falls strictly inside a token."""


class OverlappingSpans(SeqforgeError):
    """Two entity spans overlap; the flat tagging scheme cannot encode them."""


# --- file formats ----------------------------------------------------------

class MalformedAnnLine(SeqforgeError):
    """A standoff T-line does not follow the `Tn<TAB>Cat start end<TAB>surface` grammar."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class OffsetOutOfRange(SeqforgeError):
    """An annotation references offsets outside the document text."""


class SurfaceMismatch(SeqforgeError):
    """An annotation's surface string disagrees with the text slice."""


class MalformedLine(SeqforgeError):
    """A CoNLL data line has fewer than two columns."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class UnknownLabelForm(SeqforgeError):
    """A label is neither 'O' nor of the form 'B-<cat>'/'I-<cat>'."""


# --- embeddings / vocabulary -----------------------------------------------

class FileUnreadable(SeqforgeError):
    """An input file cannot be opened or decoded."""


class EmptyTable(SeqforgeError):
    """An embedding file yielded zero valid entries."""


class EmptySplit(SeqforgeError):
    """A dataset split required to be non-empty has no usable sentences."""


# --- network ----------------------------------------------------------------

class ShapeMismatch(SeqforgeError):
    """Tensor shapes disagree with the configuration or vocabulary."""


class LabelOutOfRange(SeqforgeError):
    """A gold label index falls outside the label set."""


class CorruptCheckpoint(SeqforgeError):
    """A checkpoint file is truncated or internally inconsistent."""


class VersionMismatch(SeqforgeError):
    """A checkpoint was written by an incompatible format version."""


# --- configuration ----------------------------------------------------------

class ConfigError(SeqforgeError):
    """Base class for configuration problems."""


class MissingRequiredKey(ConfigError):
    """A required configuration key is absent."""


class ConfigTypeError(ConfigError):
    """A configuration value cannot be parsed as its declared type."""


class ConfigRangeError(ConfigError):
    """A configuration value is outside its legal range."""


# --- evaluation ---------------------------------------------------------------

class DocumentMismatch(SeqforgeError):
    """Gold and predicted document sets cannot be paired."""
