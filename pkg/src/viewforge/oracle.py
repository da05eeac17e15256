"""Analytic test scenes and a brute-force reference renderer.

Scenes with exact ray-surface intersections provide ground-truth images,
depth, and normals without any estimator in the loop. The brute-force
renderer re-derives each output pixel by scanning every point (O(H*W*N) by
design) while sharing only the elementwise geometry primitives with the fast
path, so agreement between the two is meaningful evidence.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import EmptyCloud
from .geometry import (
    CameraIntrinsics,
    RigidTransform,
    camera_center,
    dot_rows,
    intrinsics_from_hfov,
    transform_points,
)
from .lifting import PointCloud, project_points, scene_stats, unproject
from .rendering import PseudoView, render
from .sampling import RandomStream, SamplerConfig, sample_pose

Texture = Callable[[np.ndarray, np.ndarray], np.ndarray]


def checkerboard(cells: int = 8) -> Texture:
    """Checker pattern over normalized (u, v) in [0, 1]."""
    def tex(u, v):
        tile = (np.floor(u * cells).astype(int) + np.floor(v * cells).astype(int)) % 2
        rgb = np.empty(u.shape + (3,))
        rgb[..., 0] = tile
        rgb[..., 1] = 1.0 - tile
        rgb[..., 2] = 0.5
        return rgb
    return tex


def axis_gradient() -> Texture:
    """Left-right and top-bottom ramps; every pixel's (r, g) is unique."""
    def tex(u, v):
        rgb = np.empty(u.shape + (3,))
        rgb[..., 0] = u
        rgb[..., 1] = v
        rgb[..., 2] = 0.25 + 0.5 * u * v
        return rgb
    return tex


def default_texture(cells: int = 8) -> Texture:
    """Checker blended with gradients: one-pixel misregistration is visible."""
    check = checkerboard(cells)
    grad = axis_gradient()
    def tex(u, v):
        return 0.5 * check(u, v) + 0.5 * grad(u, v)
    return tex


@dataclass(frozen=True)
class FrontoPlane:
    """Plane z = depth, facing the camera."""
    depth: float
    texture: Texture = default_texture()


@dataclass(frozen=True)
class SlantedPlane:
    """Plane through `point` with unit normal `normal` (oriented camera-facing)."""
    point: np.ndarray
    normal: np.ndarray
    texture: Texture = default_texture()


@dataclass(frozen=True)
class Sphere:
    """Sphere at `center` with radius `radius`."""
    center: np.ndarray
    radius: float
    texture: Texture = default_texture()


AnalyticScene = Union[FrontoPlane, SlantedPlane, Sphere]


def realize(scene: AnalyticScene, intrinsics: CameraIntrinsics):
    """Exact image, depth, and normals of the scene at the pixel centers.

    Rays leave the origin through each pixel center; pixels whose ray misses
    the surface get depth 0 (invalid). Normals are unit and camera-facing.
    """
    h, w = intrinsics.height, intrinsics.width
    cols, rows = np.meshgrid(np.arange(w), np.arange(h))
    # Ray directions with dir.z = 1: depth along the optical axis equals t.
    dx = (cols + 0.5 - intrinsics.cx) / intrinsics.fx
    dy = -(rows + 0.5 - intrinsics.cy) / intrinsics.fy
    normals = np.zeros((h, w, 3))

    if isinstance(scene, FrontoPlane):
        depth = np.full((h, w), float(scene.depth))
        normals[..., 2] = -1.0
    elif isinstance(scene, SlantedPlane):
        n = np.asarray(scene.normal, dtype=float)
        n = n / math.sqrt(float(n @ n))
        p0 = np.asarray(scene.point, dtype=float)
        plane_d = float(n @ p0)
        if plane_d > 0:
            n, plane_d = -n, -plane_d
        if plane_d == 0:
            raise ValueError("plane passes through the camera origin")
        # n . p0 < 0 now: the normal faces the camera for every surface point.
        denom = n[0] * dx + n[1] * dy + n[2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = plane_d / denom
        depth = np.where(np.isfinite(t) & (t > 0), t, 0.0)
        normals[:] = n
    elif isinstance(scene, Sphere):
        c0 = np.asarray(scene.center, dtype=float)
        r = float(scene.radius)
        # |t*dir - c0|^2 = r^2 with dir = (dx, dy, 1)
        a = dx * dx + dy * dy + 1.0
        b = -2.0 * (dx * c0[0] + dy * c0[1] + c0[2])
        c = float(c0 @ c0) - r * r
        disc = b * b - 4.0 * a * c
        safe = disc >= 0
        sq = np.sqrt(np.where(safe, disc, 0.0))
        t_near = (-b - sq) / (2.0 * a)
        t_far = (-b + sq) / (2.0 * a)
        t = np.where(t_near > 0, t_near, t_far)
        depth = np.where(safe & (t > 0), t, 0.0)
        hit = depth > 0
        px = np.where(hit, dx * depth, 0.0)
        py = np.where(hit, dy * depth, 0.0)
        pz = depth
        # A camera inside the sphere sees the interior: flip to inward normals.
        sign = -1.0 if float(c0 @ c0) < r * r else 1.0
        normals[..., 0] = np.where(hit, sign * (px - c0[0]) / r, 0.0)
        normals[..., 1] = np.where(hit, sign * (py - c0[1]) / r, 0.0)
        normals[..., 2] = np.where(hit, sign * (pz - c0[2]) / r, -1.0)
    else:
        raise TypeError(f"unknown scene type {type(scene)!r}")

    u_norm = (cols + 0.5) / w
    v_norm = (rows + 0.5) / h
    image = np.clip(scene.texture(u_norm, v_norm), 0.0, 1.0)
    return image, depth, normals


def brute_force_render(cloud: PointCloud, transform: RigidTransform,
                       intrinsics: CameraIntrinsics, eps_near: float = 1e-3) -> PseudoView:
    """Reference renderer: every output pixel independently scans all points.

    Shares only elementwise geometry primitives (transform, projection,
    facing test) with the fast path; the rasterization decision per pixel is
    re-derived from scratch.
    """
    if len(cloud) == 0:
        raise EmptyCloud("cannot render an empty cloud")
    h, w = intrinsics.height, intrinsics.width
    image = np.zeros((h, w, 3))
    mask = np.zeros((h, w), dtype=bool)
    zbuffer = np.full((h, w), np.inf)

    center = camera_center(transform)
    facing = dot_rows(cloud.normals, center - cloud.points) > 0.0
    moved = transform_points(transform, cloud.points)
    depth = moved[:, 2]
    usable = facing & (depth > eps_near)
    with np.errstate(divide="ignore", invalid="ignore"):
        u, v = project_points(moved, intrinsics)
    px = np.full(len(cloud), -1, dtype=np.int64)
    py = np.full(len(cloud), -1, dtype=np.int64)
    px[usable] = np.floor(u[usable]).astype(np.int64)
    py[usable] = np.floor(v[usable]).astype(np.int64)

    for y in range(h):
        in_row = usable & (py == y)
        if not in_row.any():
            continue
        for x in range(w):
            hits = np.nonzero(in_row & (px == x))[0]
            if hits.size == 0:
                continue
            # argmin returns the first minimum: nearest depth, earliest index.
            winner = hits[np.argmin(depth[hits])]
            image[y, x] = cloud.colors[winner]
            zbuffer[y, x] = depth[winner]
            mask[y, x] = True
    return PseudoView(image, mask, zbuffer)


@dataclass(frozen=True)
class TrialFailure:
    trial: int
    seed: int
    detail: str


def random_scene(gen: np.random.Generator):
    """Random analytic scene with random size and fov, for equivalence trials."""
    w = int(gen.integers(16, 65))
    h = int(gen.integers(16, 65))
    hfov = math.radians(float(gen.uniform(45.0, 110.0)))
    intrinsics = intrinsics_from_hfov(w, h, hfov)
    cells = int(gen.integers(3, 10))
    kind = int(gen.integers(0, 3))
    if kind == 0:
        scene = FrontoPlane(float(gen.uniform(0.5, 5.0)), default_texture(cells))
    elif kind == 1:
        normal = gen.normal(size=3)
        normal[2] = -abs(normal[2]) - 1.0      # keep the plane visibly tilted, not edge-on
        point = np.array([gen.uniform(-0.5, 0.5), gen.uniform(-0.5, 0.5), gen.uniform(1.5, 4.0)])
        scene = SlantedPlane(point, normal, default_texture(cells))
    else:
        center = np.array([gen.uniform(-0.8, 0.8), gen.uniform(-0.8, 0.8), gen.uniform(2.5, 6.0)])
        radius = float(gen.uniform(0.4, 1.4))
        scene = Sphere(center, radius, default_texture(cells))
    return scene, intrinsics


def run_equivalence_trials(trials: int, seed: int, render_fn=render,
                           config: SamplerConfig | None = None):
    """Render random scenes under random sampled poses with both renderers.

    Returns (failures, elapsed_seconds); each failure carries the trial index
    and seed needed to reproduce it.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    cfg = config or SamplerConfig()
    failures = []
    start = time.perf_counter()
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0xFACADE])))
    for i in range(trials):
        scene, intrinsics = random_scene(gen)
        image, depth, normals = realize(scene, intrinsics)
        try:
            cloud = unproject(image, depth, normals, intrinsics)
        except EmptyCloud:
            continue
        stats = scene_stats(cloud)
        hfov = 2.0 * math.atan((intrinsics.width / 2.0) / intrinsics.fx)
        rng = RandomStream(seed, f"trial-{i}", 0)
        pose = sample_pose(rng, cloud, stats, hfov, cfg)
        fast = render_fn(cloud, pose.transform, intrinsics, cfg.eps_near)
        slow = brute_force_render(cloud, pose.transform, intrinsics, cfg.eps_near)
        for name, got, want in (("image", fast.image, slow.image),
                                ("mask", fast.mask, slow.mask),
                                ("zbuffer", fast.zbuffer, slow.zbuffer)):
            if not np.array_equal(got, want):
                failures.append(TrialFailure(
                    trial=i, seed=seed,
                    detail=f"{name} mismatch (strategy={pose.strategy.value})"))
                break
    return failures, time.perf_counter() - start
