import math

import numpy as np
import pytest

from viewforge.errors import BehindCamera, DimensionMismatch, EmptyCloud
from viewforge.geometry import intrinsics_from_hfov
from viewforge.lifting import PointCloud, project, project_points, scene_stats, unproject


def flat_frame(size, depth_value, hfov=math.pi / 2):
    k = intrinsics_from_hfov(size, size, hfov)
    image = np.random.default_rng(0).uniform(size=(size, size, 3))
    depth = np.full((size, size), float(depth_value))
    normals = np.zeros((size, size, 3))
    normals[..., 2] = -1.0
    return image, depth, normals, k


class TestUnproject:
    def test_single_pixel_on_axis(self):
        image, depth, normals, k = flat_frame(1, 2.0)
        cloud = unproject(image, depth, normals, k)
        assert len(cloud) == 1
        assert np.allclose(cloud.points[0], [0, 0, 2], atol=1e-12)
        assert k.fx == pytest.approx(0.5)

    def test_corner_pixel_formula(self):
        image, depth, normals, k = flat_frame(256, 3.0)
        cloud = unproject(image, depth, normals, k)
        # pixel (0,0): x = (0.5-128)*z/128, y = +(128-0.5)*z/128
        want = np.array([(0.5 - 128) * 3 / 128, (128 - 0.5) * 3 / 128, 3.0])
        first = cloud.points[np.all(cloud.pixel_index == [0, 0], axis=1)][0]
        assert np.allclose(first, want, atol=1e-12)

    def test_invalid_pixels_dropped(self):
        image, depth, normals, k = flat_frame(8, 2.0)
        depth[0, 0] = 0.0
        depth[1, 1] = -3.0
        depth[2, 2] = np.nan
        depth[3, 3] = np.inf
        cloud = unproject(image, depth, normals, k)
        assert len(cloud) == 64 - 4
        assert np.all(cloud.points[:, 2] > 0)
        assert np.all(np.isfinite(cloud.points))

    def test_all_invalid_is_empty(self):
        image, depth, normals, k = flat_frame(4, 2.0)
        with pytest.raises(EmptyCloud):
            unproject(image, np.zeros_like(depth), normals, k)

    def test_color_and_pixel_provenance(self):
        image, depth, normals, k = flat_frame(8, 1.5)
        cloud = unproject(image, depth, normals, k)
        rows, cols = cloud.pixel_index[:, 0], cloud.pixel_index[:, 1]
        assert np.array_equal(cloud.colors, image[rows, cols])

    def test_shape_mismatch(self):
        image, depth, normals, k = flat_frame(8, 2.0)
        with pytest.raises(DimensionMismatch):
            unproject(image[:4], depth, normals, k)
        with pytest.raises(DimensionMismatch):
            unproject(image, depth[:4], normals, k)

    def test_non_unit_normals_rejected(self):
        image, depth, normals, k = flat_frame(4, 2.0)
        normals = normals * 1.5
        with pytest.raises(ValueError):
            unproject(image, depth, normals, k)


class TestProject:
    def test_on_axis_hits_principal_point(self):
        k = intrinsics_from_hfov(256, 256, math.pi / 2)
        assert project([0.0, 0, 5], k) == (128.0, 128.0)

    def test_behind_camera(self):
        k = intrinsics_from_hfov(64, 64, math.pi / 2)
        with pytest.raises(BehindCamera):
            project([0.0, 0, -1], k)
        with pytest.raises(BehindCamera):
            project([0.0, 0, 0], k)

    def test_round_trip_recovers_pixel_centers(self):
        gen = np.random.default_rng(42)
        for trial in range(20):
            size = int(gen.integers(4, 40))
            k = intrinsics_from_hfov(size, size, gen.uniform(0.6, 2.4))
            image = gen.uniform(size=(size, size, 3))
            depth = gen.uniform(0.5, 6.0, size=(size, size))
            depth[gen.uniform(size=depth.shape) < 0.1] = 0.0   # sprinkle invalid
            normals = np.zeros((size, size, 3))
            normals[..., 2] = -1.0
            try:
                cloud = unproject(image, depth, normals, k)
            except EmptyCloud:
                continue
            u, v = project_points(cloud.points, k)
            want_u = cloud.pixel_index[:, 1] + 0.5
            want_v = cloud.pixel_index[:, 0] + 0.5
            assert np.max(np.abs(u - want_u)) <= 1e-4
            assert np.max(np.abs(v - want_v)) <= 1e-4


class TestSceneStats:
    def test_single_point(self):
        cloud = PointCloud(np.array([[1.0, 2, 3]]), np.array([[0.0, 0, -1]]),
                           np.ones((1, 3)), np.array([[0, 0]]))
        stats = scene_stats(cloud)
        assert np.array_equal(stats.sigma, [0, 0, 0])
        assert stats.min_z == 3.0
        assert np.array_equal(stats.centroid, [1, 2, 3])

    def test_two_points_population_std(self):
        cloud = PointCloud(np.array([[1.0, 0, 2], [-1.0, 0, 2]]),
                           np.tile([0.0, 0, -1], (2, 1)),
                           np.ones((2, 3)), np.zeros((2, 2), dtype=int))
        stats = scene_stats(cloud)
        assert np.allclose(stats.sigma, [1.0, 0.0, 0.0], atol=1e-15)
        assert stats.min_z == 2.0
        assert np.allclose(stats.centroid, [0, 0, 2], atol=1e-15)

    def test_fronto_plane_has_zero_depth_spread(self):
        image, depth, normals, k = flat_frame(16, 2.5)
        stats = scene_stats(unproject(image, depth, normals, k))
        assert stats.sigma[2] == 0.0
        assert stats.min_z == 2.5

    def test_empty_cloud(self):
        cloud = PointCloud(np.zeros((0, 3)), np.zeros((0, 3)),
                           np.zeros((0, 3)), np.zeros((0, 2), dtype=int))
        with pytest.raises(EmptyCloud):
            scene_stats(cloud)
