import math

import numpy as np
import pytest

from viewforge.errors import EmptyCloud
from viewforge.geometry import identity_transform, intrinsics_from_hfov
from viewforge.lifting import project_points, unproject
from viewforge.oracle import (
    FrontoPlane,
    SlantedPlane,
    Sphere,
    brute_force_render,
    default_texture,
    random_scene,
    realize,
    run_equivalence_trials,
)
from viewforge.rendering import render
from viewforge.sampling import RandomStream, sample_pose
from viewforge.lifting import scene_stats


class TestRealize:
    def test_fronto_plane(self):
        k = intrinsics_from_hfov(16, 16, math.pi / 2)
        image, depth, normals = realize(FrontoPlane(2.0), k)
        assert np.all(depth == 2.0)
        assert np.all(normals == [0, 0, -1])
        assert image.min() >= 0.0 and image.max() <= 1.0

    def test_slanted_plane_satisfies_plane_equation(self):
        k = intrinsics_from_hfov(32, 32, math.radians(70))
        point = np.array([0.1, -0.2, 2.5])
        normal = np.array([0.3, 0.2, -1.0])
        image, depth, normals = realize(SlantedPlane(point, normal), k)
        cloud = unproject(image, depth, normals, k)
        n_unit = normal / np.linalg.norm(normal)
        lhs = cloud.points @ n_unit
        assert np.allclose(lhs, float(n_unit @ point), atol=1e-9)
        # stored normals face the camera at the origin
        assert np.all((cloud.normals * (0 - cloud.points)).sum(axis=1) > 0)

    def test_sphere_on_axis_depth(self):
        k = intrinsics_from_hfov(65, 65, math.pi / 2)
        image, depth, normals = realize(Sphere(np.array([0.0, 0, 5.0]), 1.0), k)
        # pixel (32, 32) center is exactly the principal point: hit at z = 4
        assert depth[32, 32] == pytest.approx(4.0, abs=1e-12)
        assert np.allclose(normals[32, 32], [0, 0, -1], atol=1e-12)

    def test_sphere_normals_unit_and_facing(self):
        k = intrinsics_from_hfov(33, 33, math.pi / 2)
        image, depth, normals = realize(Sphere(np.array([0.4, -0.2, 4.0]), 1.2), k)
        hit = depth > 0
        assert hit.any() and not hit.all()
        lens = np.linalg.norm(normals[hit], axis=1)
        assert np.allclose(lens, 1.0, atol=1e-9)

    def test_sphere_behind_camera_is_empty(self):
        k = intrinsics_from_hfov(16, 16, math.pi / 2)
        image, depth, normals = realize(Sphere(np.array([0.0, 0, -5.0]), 1.0), k)
        assert np.all(depth == 0.0)
        with pytest.raises(EmptyCloud):
            unproject(image, depth, normals, k)

    def test_plane_through_origin_rejected(self):
        k = intrinsics_from_hfov(8, 8, math.pi / 2)
        with pytest.raises(ValueError):
            realize(SlantedPlane(np.zeros(3), np.array([0.0, 0, -1.0])), k)

    def test_unproject_round_trip_hits_pixel_centers(self):
        gen = np.random.Generator(np.random.Philox(6))
        for _ in range(10):
            scene, k = random_scene(gen)
            image, depth, normals = realize(scene, k)
            try:
                cloud = unproject(image, depth, normals, k)
            except EmptyCloud:
                continue
            u, v = project_points(cloud.points, k)
            assert np.max(np.abs(u - (cloud.pixel_index[:, 1] + 0.5))) <= 1e-4
            assert np.max(np.abs(v - (cloud.pixel_index[:, 0] + 0.5))) <= 1e-4

    def test_texture_sensitive_to_one_pixel_shift(self):
        k = intrinsics_from_hfov(32, 32, math.pi / 2)
        image, _, _ = realize(FrontoPlane(2.0, default_texture()), k)
        assert not np.array_equal(image, np.roll(image, 1, axis=1))
        assert not np.array_equal(image, np.roll(image, 1, axis=0))


class TestBruteForceRender:
    def test_identity_reproduces_source(self):
        k = intrinsics_from_hfov(24, 24, math.pi / 2)
        image, depth, normals = realize(FrontoPlane(2.0), k)
        cloud = unproject(image, depth, normals, k)
        view = brute_force_render(cloud, identity_transform(), k)
        assert np.array_equal(view.image, image)
        assert view.mask.all()

    def test_empty_cloud(self):
        from viewforge.lifting import PointCloud

        empty = PointCloud(np.zeros((0, 3)), np.zeros((0, 3)),
                           np.zeros((0, 3)), np.zeros((0, 2), dtype=int))
        with pytest.raises(EmptyCloud):
            brute_force_render(empty, identity_transform(),
                               intrinsics_from_hfov(8, 8, math.pi / 2))

    def test_agrees_with_fast_path_on_random_trials(self):
        failures, elapsed = run_equivalence_trials(25, seed=321)
        assert failures == []

    def test_catches_injected_rounding_bug(self):
        def buggy_render(cloud, transform, intrinsics, eps_near=1e-3):
            from viewforge.geometry import camera_center, dot_rows, transform_points
            from viewforge.lifting import project_points
            from viewforge.rendering import PseudoView

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
            px = np.rint(u).astype(np.int64)      # off-by-one: rounds instead of floor
            py = np.rint(v).astype(np.int64)
            inside = (px >= 0) & (px < w) & (py >= 0) & (py < h)
            px, py, depth = px[inside], py[inside], moved[inside, 2]
            colors = colors[inside]
            pix = py * w + px
            order = np.lexsort((depth, pix))
            first = np.ones(order.size, dtype=bool)
            first[1:] = pix[order][1:] != pix[order][:-1]
            sel = order[first]
            image[py[sel], px[sel]] = colors[sel]
            zbuffer[py[sel], px[sel]] = depth[sel]
            mask[py[sel], px[sel]] = True
            return PseudoView(image, mask, zbuffer)

        failures, _ = run_equivalence_trials(40, seed=99, render_fn=buggy_render)
        assert failures
        first = failures[0]
        assert isinstance(first.trial, int)
        assert first.seed == 99
        assert first.detail


class TestSampledPoseAgreement:
    def test_handful_of_strategy_draws(self):
        gen = np.random.Generator(np.random.Philox(17))
        for trial in range(10):
            scene, k = random_scene(gen)
            image, depth, normals = realize(scene, k)
            try:
                cloud = unproject(image, depth, normals, k)
            except EmptyCloud:
                continue
            stats = scene_stats(cloud)
            hfov = 2.0 * math.atan((k.width / 2.0) / k.fx)
            pose = sample_pose(RandomStream(55, f"agree-{trial}", 0), cloud, stats, hfov)
            fast = render(cloud, pose.transform, k)
            slow = brute_force_render(cloud, pose.transform, k)
            assert np.array_equal(fast.image, slow.image)
            assert np.array_equal(fast.mask, slow.mask)
            assert np.array_equal(fast.zbuffer, slow.zbuffer)
