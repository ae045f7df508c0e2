"""Exception hierarchy.

Errors fall into three families so the CLI can map them to exit codes:
``ConfigError`` (2), ``DataError`` (3) and ``NumericError`` (4).
"""


class HsiBloodError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(HsiBloodError, ValueError):
    exit_code = 2


class DataError(HsiBloodError, ValueError):
    exit_code = 3


class NumericError(HsiBloodError, ArithmeticError):
    exit_code = 4


# header / raw cube parsing
class MissingMagic(DataError):
    pass


class MissingRequiredKey(DataError):
    pass


class MalformedList(DataError):
    pass


class LengthMismatch(DataError):
    pass


class SizeMismatch(DataError):
    pass


class UnsupportedDataType(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class LabelOutOfRange(DataError):
    pass


class NonMonotoneWavelengths(DataError):
    pass


class EmptyLibrary(DataError):
    pass


# preprocessing
class IndexOutOfRange(ConfigError):
    pass


class AllBandsRemoved(ConfigError):
    pass


class AxisMismatch(DataError):
    pass


class ZeroMedianPanel(NumericError):
    pass


class EmptySource(DataError):
    pass


class EmptyClass(DataError):
    pass


class NonPositiveMedianWarning(UserWarning):
    """Some pixels had a median <= 0 and were left unnormalized."""


class ExtrapolationWarning(UserWarning):
    """Resampling targets fell outside the source wavelength range."""


# detection
class TooFewSamples(DataError):
    pass


class UnrecoverablySingular(NumericError):
    pass


class DimensionMismatch(DataError):
    pass


class DegenerateTarget(NumericError):
    pass


class UnresolvableTarget(ConfigError):
    pass


# evaluation
class SingleClass(DataError):
    pass


class NoPositives(DataError):
    pass


class EmptyScores(DataError):
    pass


# synthetic scenes
class InvalidSpec(ConfigError):
    pass


# batch front-end
class MissingInput(DataError):
    pass
