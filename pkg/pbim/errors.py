"""Exception hierarchy shared by every pipeline stage."""


class PbimError(Exception):
    """Base class for all toolkit errors."""


class ArgumentError(PbimError, ValueError):
    """An operation was called with arguments that violate its preconditions."""


class ConfigError(PbimError, ValueError):
    """A configuration value is unknown, malformed, or cannot be satisfied."""


class ImageReadError(PbimError, OSError):
    """An image file could not be opened or decoded."""


class ImageFormatError(PbimError, ValueError):
    """An image file has an unsupported raster format."""


class FormatVersionError(PbimError):
    """A persisted artifact was written by an incompatible format version."""


class IntegrityError(PbimError):
    """A persisted artifact failed its checksum or is truncated."""


class TrainingError(PbimError):
    """The classifier could not be trained on the given examples."""
