"""Exception hierarchy and process exit codes for kg-path-forge."""

from enum import IntEnum


class ExitCode(IntEnum):
    """Process exit codes shared by every CLI command."""

    OK = 0
    USAGE = 1
    DATA = 2
    INTERNAL = 3


class KgpfError(Exception):
    """Base class for all toolkit errors."""

    exit_code: ExitCode = ExitCode.INTERNAL


class ConfigError(KgpfError):
    """Invalid or incomplete configuration."""

    exit_code = ExitCode.USAGE


class DataError(KgpfError):
    """Input data is missing, unreadable or violates its format."""

    exit_code = ExitCode.DATA


class GraphLoadError(DataError):
    """Concept or edge file rejected at load."""


class ConceptLookupError(DataError, KeyError):
    """A cui is not present in the graph."""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


class PathParseError(DataError):
    """A path string violates the path grammar.

    ``offset`` is the 1-based column where the problem was detected.
    """

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class PathResolutionError(DataError):
    """A concept name in a path does not match any preferred name."""


class NoteFormatError(DataError):
    """A notes JSONL line is malformed."""


class DatasetFormatError(DataError):
    """A dataset or PathSet JSONL line is malformed."""


class PredictionFormatError(DataError):
    """Predictions cannot be aligned with their dataset."""


class BundleFormatError(DataError):
    """A tensor container file is corrupt or unsupported."""


class MergeSchemaError(DataError):
    """Two tensor bundles do not share names, shapes or dtypes."""


class UnsupportedTaskError(DataError):
    """An operation was asked to handle a task kind it does not support."""


class InvariantViolation(KgpfError):
    """An internal consistency check failed."""

    exit_code = ExitCode.INTERNAL
