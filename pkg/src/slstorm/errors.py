"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical procedure diverged or produced non-finite values."""


class TiffError(ValueError):
    """Base class for TIFF parsing and validation failures."""


class TiffFormatError(TiffError):
    """The byte stream is not a well-formed baseline TIFF."""


class TiffUnsupportedError(TiffError):
    """Well-formed TIFF using a feature outside the baseline grayscale subset."""


class CsvFormatError(ValueError):
    """Malformed localization CSV; message carries the offending line number."""


class WeightsFileError(ValueError):
    """Base class for model weights file failures."""


class WeightsVersionError(WeightsFileError):
    """Weights file declares a format version this reader does not handle."""


class WeightsChecksumError(WeightsFileError):
    """Weights payload does not match its stored checksum."""


class ConfigError(ValueError):
    """Malformed run-configuration file or unknown configuration key."""
