"""Exception hierarchy shared across the pipeline."""


class SegSynthError(Exception):
    """Base class for all library errors."""


class UnknownClass(SegSynthError):
    """A class name or id could not be resolved against the taxonomy."""


class EncodeFailure(SegSynthError):
    """Mask could not be encoded (invariant violation)."""


class DecodeFailure(SegSynthError):
    """Bytes are not a decodable palette-indexed mask."""


class ShapeMismatch(SegSynthError):
    """Two arrays that must share dimensions do not."""


class DimensionMismatch(SegSynthError):
    """Vectors or matrices of incompatible dimension."""


class ZeroVector(SegSynthError):
    """Cosine similarity is undefined for a zero-norm vector."""


class TooFewSamples(SegSynthError):
    """Not enough samples for the requested statistic."""


class NotNormalized(SegSynthError):
    """Probability rows do not sum to one."""


class NumericalFailure(SegSynthError):
    """A numerical routine left its validity domain (e.g. non-PSD product)."""


class EmptyCaption(SegSynthError):
    """Captioner returned a blank caption."""


class GenerationFailed(SegSynthError):
    """Every requested variant of a record failed to generate."""


class InvalidAlpha(SegSynthError):
    """Synthetic sampling probability outside [0, 1]."""


class EmptyDataset(SegSynthError):
    """No records to sample from."""


class NotDivisible(SegSynthError):
    """Class count does not divide evenly into the requested folds."""


class MissingFile(SegSynthError):
    """A listed corpus file is absent on disk."""


class VersionError(SegSynthError):
    """Manifest schema version is not supported."""


class InconsistentManifest(SegSynthError):
    """Manifest contents contradict each other or the on-disk artifacts."""


class IoFailure(SegSynthError):
    """Filesystem operation failed during dataset assembly."""


class ConfigError(SegSynthError):
    """Pipeline configuration is invalid."""


class BackendError(SegSynthError):
    """A model backend call failed.

    ``kind`` is one of ``"transient"``, ``"permanent"``, ``"protocol"``.
    Transient failures are retried by the HTTP client; the others are not.
    """

    def __init__(self, message, kind="permanent"):
        super().__init__(message)
        self.kind = kind


class BackendTimeout(BackendError):
    def __init__(self, message):
        super().__init__(message, kind="transient")
