"""Exception types shared across the package."""


class WiidError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateInputError(WiidError, ValueError):
    """Input has no usable content (zero power, flat spectrum, all-zero matrix)."""


class DomainError(WiidError, ValueError):
    """Argument outside its mathematical or tabulated domain."""


class BoundsError(WiidError, IndexError):
    """Requested sample window does not fit inside the stream or packet body."""


class VariantError(WiidError, ValueError):
    """Unknown or mismatched waveform variant."""


class PayloadLengthError(WiidError, ValueError):
    """Payload longer than the packet type allows."""


class ShapeError(WiidError, ValueError):
    """Tensor shapes do not agree."""


class NumericError(WiidError, ArithmeticError):
    """Non-finite values appeared during a computation."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class TrainingDivergedError(NumericError):
    def __init__(self, message, epoch, batch):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class ConfigError(WiidError, ValueError):
    """Invalid generation, training or experiment configuration."""


class DatasetFormatError(WiidError):
    """File is not a dataset or checkpoint this package understands."""


class DatasetTruncatedError(DatasetFormatError):
    """File ended before the declared number of records."""
