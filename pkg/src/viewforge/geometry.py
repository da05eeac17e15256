"""SE(3), quaternion, and pinhole-intrinsics primitives.

Conventions used throughout the library:

  * Right-handed camera frame: x right, y up, z forward into the scene.
  * Extrinsics are world-to-camera maps: x_cam = R @ x_world + t.
  * Quaternions are scalar-first (w, x, y, z) and canonicalized to w >= 0.
  * Pixel (row v, col u) has continuous center (u + 0.5, v + 0.5); v grows
    downward, so unprojection negates the vertical offset.
  * The global up axis used by look-at constructions is +y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateLookAt,
    InvalidFov,
    NonUnitQuaternion,
    NotARotation,
)

UP = np.array([0.0, 1.0, 0.0])
FORWARD = np.array([0.0, 0.0, 1.0])

QUAT_NORM_TOL = 1e-6
ROTATION_TOL = 1e-6
LOOKAT_TOL = 1e-6


@dataclass(frozen=True)
class RigidTransform:
    """World-to-camera rigid motion: p_cam = rotation @ p_world + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))
        if self.rotation.shape != (3, 3) or self.translation.shape != (3,):
            raise ValueError("RigidTransform expects a 3x3 rotation and a 3-vector")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics; principal point sits at the image center."""

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


@dataclass(frozen=True)
class PoseVector7:
    """Serialized pose: translation (x, y, z) plus unit quaternion (w, x, y, z)."""

    translation: np.ndarray
    quaternion: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))
        object.__setattr__(self, "quaternion", np.asarray(self.quaternion, dtype=float))
        if self.translation.shape != (3,) or self.quaternion.shape != (4,):
            raise ValueError("PoseVector7 expects a 3-vector and a 4-vector")

    @classmethod
    def from_transform(cls, t: RigidTransform) -> "PoseVector7":
        return cls(t.translation.copy(), matrix_to_quat(t.rotation))

    def to_transform(self) -> RigidTransform:
        return RigidTransform(quat_to_matrix(self.quaternion), self.translation.copy())

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.translation, self.quaternion])


def identity_transform() -> RigidTransform:
    return RigidTransform(np.eye(3), np.zeros(3))


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise NonUnitQuaternion("quaternion must be a 4-vector")
    n = math.sqrt(float(q @ q))
    if abs(n - 1.0) > QUAT_NORM_TOL:
        raise NonUnitQuaternion(f"quaternion norm {n:.9f} != 1")
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(r) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, canonical w >= 0.

    Uses the max-diagonal branch (Shepperd) for numerical stability.
    """
    r = np.asarray(r, dtype=float)
    _check_rotation(r)
    m00, m01, m02 = r[0]
    m10, m11, m12 = r[1]
    m20, m21, m22 = r[2]
    trace = m00 + m11 + m22
    if trace > 0:
        s = math.sqrt(trace + 1.0) * 2
        q = np.array([0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s])
    elif m00 >= m11 and m00 >= m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2
        q = np.array([(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s])
    elif m11 >= m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2
        q = np.array([(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s])
    else:
        s = math.sqrt(1.0 + m22 - m00 - m11) * 2
        q = np.array([(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s])
    q = q / math.sqrt(float(q @ q))
    if q[0] < 0:
        q = -q
    return q


def _check_rotation(r: np.ndarray, tol: float = ROTATION_TOL) -> None:
    if r.shape != (3, 3):
        raise NotARotation("rotation must be 3x3")
    if not np.allclose(r.T @ r, np.eye(3), atol=tol):
        raise NotARotation("matrix is not orthonormal")
    if np.linalg.det(r) < 0:
        raise NotARotation("matrix has negative determinant")


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform equal to applying b first, then a."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(t: RigidTransform) -> RigidTransform:
    rt = t.rotation.T
    return RigidTransform(rt.copy(), -rt @ t.translation)


def apply(t: RigidTransform, p) -> np.ndarray:
    """Map a single 3-point through the transform."""
    p = np.asarray(p, dtype=float)
    return t.rotation @ p + t.translation


def transform_points(t: RigidTransform, points: np.ndarray) -> np.ndarray:
    """Map an (N, 3) array of points through the transform."""
    return points @ t.rotation.T + t.translation


def camera_center(t: RigidTransform) -> np.ndarray:
    """Camera position in the source frame: c = -R^T t."""
    return -(t.rotation.T @ t.translation)


def dot_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise dot product with a fixed elementwise evaluation order.

    Both the fast renderer and the brute-force reference use this, so the two
    produce bit-identical visibility decisions even for grazing points.
    """
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def look_at(camera_pos, target) -> RigidTransform:
    """Extrinsic of a camera at camera_pos looking toward target, +y as up hint.

    The camera-to-world basis is [right | up | forward] with
    forward = (target - camera_pos) normalized; the returned world-to-camera
    extrinsic stores its transpose. Raises DegenerateLookAt when forward is
    within tolerance of the global up axis.
    """
    camera_pos = np.asarray(camera_pos, dtype=float)
    target = np.asarray(target, dtype=float)
    offset = target - camera_pos
    dist = math.sqrt(float(offset @ offset))
    if dist <= 1e-9:
        raise DegenerateLookAt("camera position coincides with target")
    forward = offset / dist
    right = np.cross(UP, forward)
    norm = math.sqrt(float(right @ right))
    if norm < LOOKAT_TOL:
        raise DegenerateLookAt("forward direction is parallel to the up axis")
    right = right / norm
    up = np.cross(forward, right)
    cam_to_world = np.column_stack([right, up, forward])
    rotation = cam_to_world.T
    return RigidTransform(rotation, -(rotation @ camera_pos))


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    kx, ky, kz = axis
    k_cross = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    c, s = math.cos(angle), math.sin(angle)
    return c * np.eye(3) + s * k_cross + (1 - c) * np.outer(axis, axis)


def intrinsics_from_hfov(width: int, height: int, hfov: float) -> CameraIntrinsics:
    """Square-pixel intrinsics from a horizontal field of view in radians."""
    if not 0.0 < hfov < math.pi:
        raise InvalidFov(f"horizontal fov {hfov} outside (0, pi)")
    f = (width / 2.0) / math.tan(hfov / 2.0)
    return CameraIntrinsics(width, height, f, f, width / 2.0, height / 2.0)
