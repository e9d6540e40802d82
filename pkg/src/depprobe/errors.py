"""Exception taxonomy shared across the toolkit.

The CLI maps these onto distinct exit codes, so keep the hierarchy flat
and the categories stable.
"""


class DepProbeError(Exception):
    """Base class for all toolkit errors."""


class ConlluParseError(DepProbeError):
    """Malformed CoNLL-U input; carries the 1-based line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class StructuralError(DepProbeError):
    """Head indices of a sentence do not form a single rooted tree."""


class VocabularyError(DepProbeError):
    """Relation label outside the supported vocabulary."""


class FormatError(DepProbeError):
    """Binary container violates its declared layout (magic, version)."""


class DataError(DepProbeError):
    """Payload values violate a data invariant (NaN, Inf)."""


class TruncatedFileError(DepProbeError):
    """Binary file ends before its declared payload; carries byte offset."""

    def __init__(self, message, byte_offset):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset


class AlignmentError(DepProbeError):
    """Corpus and embedding file disagree on sentence count or length."""


class CompatibilityError(DepProbeError):
    """Checkpoint and embedding file disagree on dimensionality or layer."""


class DegenerateInputError(DepProbeError):
    """Statistic undefined for the given input (constant series, |r| = 1)."""


class RankError(DepProbeError):
    """Matrix argument is rank-deficient where full column rank is required."""
