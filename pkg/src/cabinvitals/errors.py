"""Exception types raised across the package."""


class ValidationError(ValueError):
    """A configuration, scenario or argument violates its invariants."""


class InsufficientSamplesError(ValidationError):
    """Input is too short for the requested operation."""


class EmptySpectrumError(ValueError):
    """A spectrum or map carries no energy."""


class NoDriverError(LookupError):
    """No target detection is available to act as the driver."""


class FrameFormatError(IOError):
    """A frame file is malformed or truncated."""


class UnsupportedVersionError(FrameFormatError):
    """A frame file declares a format version this reader does not know."""


class NumericalError(ArithmeticError):
    """Processing produced non-finite values."""


class ConfigParseError(ValueError):
    """A scenario or config file is not well-formed (syntax, types, unknown keys)."""
