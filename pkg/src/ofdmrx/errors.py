"""Exception types shared across the receiver library."""


class ReceiverError(Exception):
    """Base class for all errors raised by this package."""

    category = "internal"


class ConfigurationError(ReceiverError):
    """Invalid numerology or generator configuration (bad FFT size, taps, seed...)."""

    category = "config"


class NumericInputError(ReceiverError):
    """Non-finite samples handed to a numeric kernel."""

    category = "input"


class NonPrimitiveTapsError(ReceiverError):
    """LFSR taps whose output period falls short of maximum length."""

    category = "config"


class ContractError(ReceiverError):
    """Caller violated an API contract (shape mismatch, unregistered consumer...)."""

    category = "contract"


class FramingError(ReceiverError):
    """Sample counts that do not line up with the configured symbol framing."""

    category = "input"


class InputError(ReceiverError):
    """Malformed or inconsistent external input (files, captures)."""

    category = "input"


class MeasurementError(ReceiverError):
    """A measurement is undefined for the given inputs (e.g. zero reference power)."""

    category = "input"


class LifecycleError(ReceiverError):
    """Operation on a ring buffer in the wrong lifecycle state."""

    category = "contract"


class BackpressureError(ReceiverError):
    """Ring buffer full under the fail-fast policy."""

    category = "backpressure"


class PipelineOrderError(ReceiverError):
    """Data symbol processed before a channel estimate exists."""

    category = "contract"


class DetectionError(ReceiverError):
    """Packet detection failed or produced an unusable offset."""

    category = "detection"


class IncompleteDataError(ReceiverError):
    """Benchmark records are missing required engine/stage combinations."""

    category = "input"

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = list(missing)
