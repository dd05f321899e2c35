"""Exception hierarchy.

Two branches matter to callers: :class:`DataError` for problems with the
input data (the CLI maps these to exit code 3) and :class:`NumericError`
for statistical or numerical failures (exit code 4). Configuration
problems raise :class:`ConfigError` (exit code 2).
"""


class NphkitError(Exception):
    """Base class for all package errors."""


class DataError(NphkitError):
    """Invalid or unusable input data."""


class EmptyDatasetError(DataError):
    """Dataset contains no records."""


class NegativeTimeError(DataError):
    """A time or entry value is negative or not finite."""


class SingleArmError(DataError):
    """A two-sample operation was asked of a single-arm dataset."""


class EmptyAfterFilterError(DataError):
    """An arm filter left no records to estimate from."""


class NoEventsError(DataError):
    """A rank test requires at least one observed event."""


class IngestError(DataError):
    """Malformed CSV input; message carries the offending line number."""


class NumericError(NphkitError):
    """Statistical or numerical failure."""


class ZeroVarianceError(NumericError):
    """All weighted variance terms vanished; the test is undefined."""


class DegenerateVarianceError(NumericError):
    """A variance estimate is zero where a nonzero effect was observed."""


class TauBeyondFollowUpError(NumericError):
    """Requested truncation time exceeds the observed follow-up."""


class MvnFailureError(NumericError):
    """The multivariate-normal tail routine missed its accuracy target."""


class NonConvergenceError(NumericError):
    """An iterative fit failed to converge (e.g. monotone likelihood)."""


class ConfigError(NphkitError):
    """Invalid study or CLI configuration."""
