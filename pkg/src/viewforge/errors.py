"""Named error conditions raised across the library."""


class NonUnitQuaternion(ValueError):
    """Quaternion norm differs from 1 by more than the tolerance."""


class NotARotation(ValueError):
    """Matrix is not orthonormal with determinant +1 within tolerance."""


class DegenerateLookAt(ValueError):
    """Forward direction is (anti)parallel to the global up axis."""


class InvalidFov(ValueError):
    """Horizontal field of view outside the open interval (0, pi)."""


class DimensionMismatch(ValueError):
    """Array shapes disagree with each other or with the intrinsics."""


class EmptyCloud(ValueError):
    """No usable points (no valid depth pixels, or all excluded)."""


class BehindCamera(ValueError):
    """Projection requested for a point with non-positive depth."""


class InvalidRange(ValueError):
    """Sampling range is empty or has a non-positive lower bound."""


class ZeroFeature(ValueError):
    """Feature embedding has (near-)zero norm; cosine undefined."""


class TooSmall(ValueError):
    """Image smaller than the metric's window."""


class EmptyGrid(ValueError):
    """Scale sweep called with no candidate scales."""


class MissingCounterpart(ValueError):
    """Frame present in one directory but not the other."""


class ConfigError(ValueError):
    """Malformed run configuration or manifest."""
