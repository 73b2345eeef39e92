"""Exception types shared across the airpad package."""


class AirpadError(Exception):
    """Base class for all airpad errors."""


class ConfigError(AirpadError):
    """A configuration value violates its documented range or relationship."""


class TrajectoryGap(AirpadError):
    """A scan interval is not covered by the supplied hand samples."""


class InsufficientIdleFrames(AirpadError):
    """Too few idle frames were supplied to establish a baseline."""


class NonPositiveProximity(AirpadError):
    """Proximity value outside (0, 1]; distance estimate undefined."""


class OutOfOrderTimestamp(AirpadError):
    """Samples or coordinates arrived with non-increasing timestamps."""


class EmptyTrace(AirpadError):
    """A trace or polyline with no points where at least one is required."""


class SegmentationFailure(AirpadError):
    """A synthesized trajectory did not produce exactly one gesture."""


class FormatError(AirpadError):
    """A dataset or model file failed magic/version/length validation."""


class ShapeMismatch(AirpadError):
    """Tensor shapes are incompatible with the requested operation."""


class DivergenceDetected(AirpadError):
    """Training loss became NaN; the run was aborted."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class NoModelLoaded(AirpadError):
    """Classification was requested but no model is loaded."""


class PayloadSizeMismatch(AirpadError):
    """An image payload does not have the expected byte length."""


class MalformedMessage(AirpadError):
    """An inbound stream message could not be parsed or validated."""
