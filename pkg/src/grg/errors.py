"""Exception taxonomy shared by every pipeline stage.

Each error class maps to one CLI exit category and one HTTP status, so
raising the right type is enough for the gateway to report it correctly.
"""


class GrgError(Exception):
    """Base class for engine errors."""

    exit_code = 1


class ConfigError(GrgError):
    """Invalid or missing configuration."""

    exit_code = 2


class ContractError(GrgError):
    """A caller violated an operation precondition (bad dims, bad ranges)."""

    exit_code = 2


class DataError(GrgError):
    """Malformed input data (manifests, benchmarks, records)."""

    exit_code = 3


class StoreStateError(GrgError):
    """A required store has not been built or is incompatible."""

    exit_code = 4


class AdapterError(GrgError):
    """A pluggable backend (judge, extractor, generator, ...) failed.

    retryable marks transport-level failures that a caller may retry.
    """

    exit_code = 5

    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class BuildError(GrgError):
    """Index or graph construction failed."""

    exit_code = 3


class LoadError(GrgError):
    """A persisted artifact is truncated, corrupt, or version-incompatible."""

    exit_code = 3
