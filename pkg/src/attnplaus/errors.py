"""Exception hierarchy.

Every error raised by the toolkit derives from :class:`AttnPlausError`.
The two intermediate classes decide the CLI exit code: :class:`DataError`
maps to 2 and :class:`NumericError` maps to 3.
"""


class AttnPlausError(Exception):
    """Base class for all toolkit errors."""


class DataError(AttnPlausError):
    """Malformed or unusable input data."""


class NumericError(AttnPlausError, ArithmeticError):
    """Non-finite values or undefined numerical quantities."""

    def __init__(self, message, tensor=None):
        super().__init__(message)
        self.tensor = tensor


class EmptySentence(DataError, ValueError):
    pass


class HighlightOutOfRange(DataError, IndexError):
    def __init__(self, message, pair_id=None):
        super().__init__(message)
        self.pair_id = pair_id


class SchemaError(DataError):
    pass


class CorpusIOError(DataError, OSError):
    pass


class EmptySelection(DataError):
    pass


class MissingPosTags(DataError):
    pass


class FormatError(DataError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class DimensionError(DataError, ValueError):
    pass


class EmptyVector(DataError, ValueError):
    pass


class RangeError(DataError, ValueError):
    pass


class DegenerateTruth(DataError):
    """The ground-truth labels contain no positive (or no negative) token."""


class UndefinedCorrelation(NumericError):
    pass


class TrainingDiverged(NumericError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
