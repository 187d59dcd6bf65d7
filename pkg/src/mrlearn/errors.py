"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataError (and its
subclasses) -> 2, anything else -> 3.
"""


class MrlearnError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(MrlearnError, ValueError):
    """Shape or size of an array is incompatible with the requested operation."""


class EmptySignalError(MrlearnError, ValueError):
    """An operation received a signal with no usable samples."""


class StateError(MrlearnError, RuntimeError):
    """An object is used out of sequence (e.g. stale forward activations)."""


class ConfigError(MrlearnError, ValueError):
    """An experiment configuration is invalid (unknown key, bad value, missing preset)."""


class DataError(MrlearnError, ValueError):
    """A dataset could not be loaded or is malformed."""


class FormatError(DataError):
    """A file does not conform to its declared format.

    ``position`` is the byte offset (or record index) where parsing failed,
    so messages can point at the corrupt spot.
    """

    def __init__(self, message, position=None, path=None):
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if position is not None:
            detail = f"{detail} (at byte offset {position})"
        super().__init__(detail)
        self.position = position
        self.path = path
