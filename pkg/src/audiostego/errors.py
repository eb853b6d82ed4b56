"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes (usage 1, data 2, capacity 3), so new
error sites should pick the closest existing class instead of raising bare
ValueError.
"""


class StegoError(Exception):
    """Base class for all toolkit errors."""


class UsageError(StegoError):
    """Bad invocation: unknown flags, lossy output extension, etc."""


class DataError(StegoError):
    """Malformed or inconsistent input data (files, shapes, formats)."""


class CapacityError(StegoError):
    """Payload does not fit the carrier under the requested settings."""


class WeightsFormatError(DataError):
    """Weight file is corrupt, truncated, or structurally inconsistent."""


class ArchitectureMismatchError(DataError):
    """Stored weights do not match the expected network configuration."""


class TrainingError(StegoError):
    """Training aborted (non-finite loss, missing data, ...)."""
