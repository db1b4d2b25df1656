"""Exception types shared across the toolkit."""


class WarpgateError(Exception):
    """Base class for all domain errors raised by this package."""


class EmptyImageError(WarpgateError):
    """Binary image contains no foreground pixel."""


class DegenerateRegionError(WarpgateError):
    """Foreground region too thin to form a closed boundary."""


class DegenerateTangentError(WarpgateError):
    """A tangent vector on the contour has zero length."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"zero-length tangent vector at contour index {index}")


class LengthMismatchError(WarpgateError):
    """Series/band lengths do not agree where they must."""


class NoFeasiblePathError(WarpgateError):
    """The band constraint leaves the alignment endpoint unreachable."""


class DegenerateClassesError(WarpgateError):
    """Training set does not contain enough classes or series per class."""


class ProfileStoreError(WarpgateError):
    """Profile store file is malformed; message names the offending field."""
