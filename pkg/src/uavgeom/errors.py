"""Exception types shared across the toolkit."""


class UavgeomError(Exception):
    """Base class for all toolkit-specific errors."""


class ValidationError(UavgeomError):
    """An input violates a stated invariant (shape, range, orthonormality...)."""


class InsufficientDataError(UavgeomError):
    """Too few points / views / valid pixels to perform the operation."""


class DegenerateConfigurationError(UavgeomError):
    """Point configuration is rank-deficient (collinear or coincident)."""


class NoCorrespondenceError(UavgeomError):
    """No nearest-neighbor pair survived the correspondence gating."""


class CoverageError(UavgeomError):
    """Predictions do not cover the sampled views."""


class AltitudeRangeError(UavgeomError):
    """A planned flight altitude falls outside the permitted envelope."""


class UndefinedBaselineError(UavgeomError):
    """Relative reduction is undefined for a non-positive baseline error."""


class FormatError(UavgeomError):
    """A file is not in one of the supported on-disk formats."""


class ParseError(FormatError):
    """A text line failed to parse; the message names the line number."""


class TruncatedFileError(FormatError):
    """A binary payload is shorter than its header promises."""
