"""Reproject a lifted point cloud into a new camera to forge a pseudo view.

Each point is mapped through the relative extrinsic, culled if its surface
normal faces away from the new camera or if it lands closer than the near
plane, projected, and dropped into the pixel containing its continuous
coordinates (floor of u, v). Depth conflicts resolve to the smallest depth;
exact ties keep the earliest point index. Pixels nothing lands on stay black
with mask false. One point fills at most one pixel; no splatting.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyCloud
from .geometry import (
    CameraIntrinsics,
    RigidTransform,
    camera_center,
    dot_rows,
    transform_points,
)
from .lifting import PointCloud, project_points, unproject
from .sampling import SampledPose


@dataclass(frozen=True)
class PseudoView:
    """Reprojected target: image in [0,1], visibility mask, and z-buffer.

    Wherever mask is false the image is exactly black and the z-buffer holds
    +inf; wherever it is true the z-buffer is a finite depth >= the near
    plane.
    """

    image: np.ndarray
    mask: np.ndarray
    zbuffer: np.ndarray


def backface_visible(normal, point, cam_center) -> bool:
    """True when the surface at `point` faces the camera at `cam_center`.

    Grazing surfaces (dot exactly zero) count as facing away.
    """
    normal = np.asarray(normal, dtype=float)
    offset = np.asarray(cam_center, dtype=float) - np.asarray(point, dtype=float)
    return bool(dot_rows(normal, offset) > 0.0)


def render(cloud: PointCloud, transform: RigidTransform,
           intrinsics: CameraIntrinsics, eps_near: float = 1e-3) -> PseudoView:
    """Z-buffered point reprojection into the target camera."""
    if len(cloud) == 0:
        raise EmptyCloud("cannot render an empty cloud")
    h, w = intrinsics.height, intrinsics.width
    image = np.zeros((h, w, 3))
    mask = np.zeros((h, w), dtype=bool)
    zbuffer = np.full((h, w), np.inf)

    center = camera_center(transform)
    facing = dot_rows(cloud.normals, center - cloud.points) > 0.0
    moved = transform_points(transform, cloud.points)
    keep = facing & (moved[:, 2] > eps_near)
    if not keep.any():
        return PseudoView(image, mask, zbuffer)

    moved = moved[keep]
    colors = cloud.colors[keep]
    u, v = project_points(moved, intrinsics)
    px = np.floor(u).astype(np.int64)
    py = np.floor(v).astype(np.int64)
    inside = (px >= 0) & (px < w) & (py >= 0) & (py < h)
    if not inside.any():
        return PseudoView(image, mask, zbuffer)

    px, py = px[inside], py[inside]
    depth = moved[inside, 2]
    colors = colors[inside]

    # Stable sort by (pixel, depth): the first hit per pixel is the nearest
    # point, ties resolving to the earliest index.
    pix = py * w + px
    order = np.lexsort((depth, pix))
    first = np.ones(order.size, dtype=bool)
    first[1:] = pix[order][1:] != pix[order][:-1]
    sel = order[first]

    image[py[sel], px[sel]] = colors[sel]
    zbuffer[py[sel], px[sel]] = depth[sel]
    mask[py[sel], px[sel]] = True
    return PseudoView(image, mask, zbuffer)


def render_pair(image, depth, normals, intrinsics: CameraIntrinsics,
                transform, eps_near: float = 1e-3) -> tuple[PseudoView, dict]:
    """Lift a source frame and reproject it in one step.

    `transform` may be a RigidTransform or a SampledPose; the returned
    metadata records the transform, intrinsics, and strategy tag (None when a
    bare transform is given).
    """
    if isinstance(transform, SampledPose):
        pose, strategy, fell_back = transform.transform, transform.strategy, transform.fell_back
    else:
        pose, strategy, fell_back = transform, None, False
    image = np.asarray(image, dtype=float)
    depth = np.asarray(depth, dtype=float)
    if image.shape[:2] != depth.shape:
        raise DimensionMismatch("image and depth dimensions disagree")
    cloud = unproject(image, depth, normals, intrinsics)
    view = render(cloud, pose, intrinsics, eps_near)
    meta = {
        "transform": pose,
        "intrinsics": intrinsics,
        "strategy": strategy,
        "fell_back": fell_back,
    }
    return view, meta
