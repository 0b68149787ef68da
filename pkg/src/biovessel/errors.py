"""Exception hierarchy shared by all biovessel modules."""

from __future__ import annotations


class VesselError(Exception):
    """Base class for every domain error raised by the package."""


class EmptyInput(VesselError, ValueError):
    pass


class InvalidEdge(VesselError, ValueError):
    pass


class InvalidRadius(VesselError, ValueError):
    pass


class InvalidParams(VesselError, ValueError):
    pass


class InvalidParam(InvalidParams):
    pass


class InvalidDomain(InvalidParams):
    pass


class InvalidRatio(InvalidParams):
    pass


class NotATree(VesselError, ValueError):
    pass


class OutOfBounds(VesselError, ValueError):
    pass


class ShapeMismatch(VesselError, ValueError):
    pass


class InvalidWindow(InvalidParams):
    pass


class EmptyAfterFilter(VesselError):
    pass


class RootNotFound(VesselError, LookupError):
    pass


class DegenerateStats(VesselError, ValueError):
    pass


class FormatError(VesselError, ValueError):
    """A persisted file does not match its declared format."""


class IoError(VesselError, OSError):
    """Reading or writing a file failed at the operating-system level."""


class GrowthStalled(UserWarning):
    """Warning category emitted when space colonization cannot reach any attractor."""
