"""Exception hierarchy shared across the package."""


class OccuLightError(Exception):
    """Base class for all package errors."""


class InvalidFrameError(OccuLightError, ValueError):
    """A skeleton or face frame is malformed or holds non-finite values."""


class DegeneratePoseError(OccuLightError, ValueError):
    """A geometric quantity is undefined for the given pose (zero-length vector)."""


class ShapeError(OccuLightError, ValueError):
    """Input dimensions do not match what the model or function expects."""


class InvalidDatasetError(OccuLightError, ValueError):
    pass


class InvalidSplitError(OccuLightError, ValueError):
    pass


class InvalidClassError(OccuLightError, ValueError):
    pass


class InvalidLabelsError(OccuLightError, ValueError):
    pass


class InvalidModelError(OccuLightError, ValueError):
    """Operation requested on a model of the wrong kind, or unreadable model file."""


class NotFittedError(OccuLightError, AttributeError):
    pass


class InvalidCacheError(OccuLightError, ValueError):
    """Backward pass given a cache that does not belong to the current network state."""


class InfeasibleConfigError(OccuLightError, ValueError):
    """Generator configuration cannot produce poses with the required label margin."""


class ProtocolError(OccuLightError, ValueError):
    """A wire line could not be parsed; ``field`` names the offending field."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{message} (field {field!r})")
        self.field = field


class UnknownSensorError(ProtocolError):
    pass


class OutOfOrderError(OccuLightError, ValueError):
    """A sensor reported a timestamp older than its previous event."""


class ScenarioError(OccuLightError, ValueError):
    def __init__(self, message, line_no=None):
        super().__init__(message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no
