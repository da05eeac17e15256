"""Lift an image with metric depth and normals into a camera-frame point cloud.

Depth maps are (H, W) float arrays holding metric z along the optical axis;
pixels with non-finite or non-positive depth are invalid and are dropped.
Normal maps are (H, W, 3) camera-frame unit vectors. Images are (H, W, 3)
floats in [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, DimensionMismatch, EmptyCloud
from .geometry import CameraIntrinsics

NORMAL_TOL = 1e-3


@dataclass(frozen=True)
class PointCloud:
    """Per-pixel lifted points, all in the source camera frame.

    pixel_index holds the (row, col) provenance of each point.
    """

    points: np.ndarray
    normals: np.ndarray
    colors: np.ndarray
    pixel_index: np.ndarray

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class SceneStats:
    """Per-axis population spread, nearest depth, and centroid of a cloud."""

    sigma: np.ndarray
    min_z: float
    centroid: np.ndarray


def unproject(image, depth, normals, intrinsics: CameraIntrinsics) -> PointCloud:
    """Back-project every valid-depth pixel into the camera frame.

    Pixel (v, u) with depth z maps to
        x = (u + 0.5 - cx) * z / fx
        y = -(v + 0.5 - cy) * z / fy
        z = z
    (v grows downward while camera y points up, hence the sign flip).
    Raises DimensionMismatch when shapes disagree with the intrinsics and
    EmptyCloud when no pixel has valid depth.
    """
    image = np.asarray(image, dtype=float)
    depth = np.asarray(depth, dtype=float)
    normals = np.asarray(normals, dtype=float)
    h, w = intrinsics.height, intrinsics.width
    if depth.shape != (h, w) or image.shape != (h, w, 3) or normals.shape != (h, w, 3):
        raise DimensionMismatch(
            f"expected image/depth/normals for {w}x{h}, got "
            f"{image.shape}, {depth.shape}, {normals.shape}"
        )
    valid = np.isfinite(depth) & (depth > 0)
    if not valid.any():
        raise EmptyCloud("no valid depth pixels")

    rows, cols = np.nonzero(valid)
    z = depth[rows, cols]
    x = (cols + 0.5 - intrinsics.cx) * z / intrinsics.fx
    y = -(rows + 0.5 - intrinsics.cy) * z / intrinsics.fy
    points = np.column_stack([x, y, z])
    n = normals[rows, cols]
    lengths = np.sqrt(np.sum(n * n, axis=1))
    if np.any(np.abs(lengths - 1.0) > NORMAL_TOL):
        raise ValueError("normals at valid pixels must be unit length within 1e-3")
    return PointCloud(
        points=points,
        normals=n,
        colors=image[rows, cols],
        pixel_index=np.column_stack([rows, cols]),
    )


def project(p, intrinsics: CameraIntrinsics) -> tuple[float, float]:
    """Continuous pixel coordinates of a camera-frame point.

    Raises BehindCamera when z <= 0.
    """
    p = np.asarray(p, dtype=float)
    if p[2] <= 0:
        raise BehindCamera(f"point depth {p[2]} is not positive")
    u = intrinsics.cx + intrinsics.fx * p[0] / p[2]
    v = intrinsics.cy - intrinsics.fy * p[1] / p[2]
    return float(u), float(v)


def project_points(points: np.ndarray, intrinsics: CameraIntrinsics):
    """Vectorized projection of (N, 3) points; caller guarantees z > 0."""
    z = points[:, 2]
    u = intrinsics.cx + intrinsics.fx * points[:, 0] / z
    v = intrinsics.cy - intrinsics.fy * points[:, 1] / z
    return u, v


def scene_stats(cloud: PointCloud) -> SceneStats:
    """Population standard deviation per axis, nearest z, and centroid."""
    if len(cloud) == 0:
        raise EmptyCloud("cannot compute stats of an empty cloud")
    pts = cloud.points
    return SceneStats(
        sigma=pts.std(axis=0),
        min_z=float(pts[:, 2].min()),
        centroid=pts.mean(axis=0),
    )
