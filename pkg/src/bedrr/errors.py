"""Exception types raised across the package."""


class BedrrError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSample(BedrrError):
    """A waveform sample is NaN or infinite."""


class TooShort(BedrrError):
    """Input holds fewer samples/frames than the operation needs."""


class OutOfRange(BedrrError):
    """A frame index lacks the requested neighbourhood."""


class InsufficientData(BedrrError):
    """Not enough observations to fit the requested model."""


class DimensionError(BedrrError):
    """Vector/matrix dimensions do not match the model."""


class DegenerateLabels(BedrrError):
    """Training labels contain only one class."""


class DivergenceError(BedrrError):
    """Training loss became non-finite.

    Carries the loss history accumulated before the abort in ``history``.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class OrderingError(BedrrError):
    """Streamed frames arrived out of order."""


class ConfigError(BedrrError):
    """Malformed configuration or model/feature mismatch."""


class NoEstimate(BedrrError):
    """No respiratory-rate estimate can be formed from the given segments."""
