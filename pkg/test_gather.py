"""
이웃 수집 테스트
- 가시성 판정
- K x K 창 레코드 수, 순서, 지오데식 δ
"""
import unittest

import numpy as np

from core.backproject import sample_center_colors
from core.gather import ViewBundle, gather_neighborhoods, visibility_test
from geometry.geodesics import GeodesicCache
from geometry.mesh import build_mesh, build_texel_map, compute_normals, prepare_mesh
from geometry.primitives import quad, uv_sphere
from geometry.raster import Camera, make_view_ring, render_gbuffer
from utils.errors import DimensionMismatchError, UsageError


def stacked_quads(gap: float):
    """z=0 의 큰 사각형 위에 gap 만큼 떨어진 작은 사각형"""
    back, front = quad(1.0, 0.0), quad(0.5, gap)
    vertices = np.concatenate([back.vertices, front.vertices])
    faces = np.concatenate([back.faces, front.faces + 4])
    uv_idx = np.concatenate([back.face_uv_indices, front.face_uv_indices + 4])
    uv = np.concatenate([back.uv_coords, front.uv_coords])
    return compute_normals(build_mesh(vertices, faces, uv, uv_idx))


def make_view(mesh, camera, color=(0.2, 0.4, 0.6)):
    gbuf = render_gbuffer(mesh, camera)
    image = np.zeros((camera.height, camera.width, 3))
    image[gbuf.mask] = color
    return ViewBundle(camera, image, gbuf)


class TestVisibility(unittest.TestCase):
    """가시성 판정"""

    def setUp(self):
        self.cam = Camera(position=(0, 0, 2), width=64, height=64)

    def test_own_position_is_visible(self):
        mesh = compute_normals(quad())
        gbuf = render_gbuffer(mesh, self.cam)
        self.assertTrue(visibility_test(gbuf, self.cam, gbuf.position[32, 20]))

    def test_occluded_point(self):
        gbuf = render_gbuffer(stacked_quads(0.5), self.cam)
        self.assertFalse(visibility_test(gbuf, self.cam, (0.0, 0.0, 0.0)))

    def test_coplanar_surfaces_within_epsilon(self):
        gbuf = render_gbuffer(stacked_quads(0.005), self.cam)
        self.assertTrue(visibility_test(gbuf, self.cam, (0.0, 0.0, 0.0), epsilon=0.01))
        self.assertFalse(visibility_test(gbuf, self.cam, (0.0, 0.0, 0.0), epsilon=0.001))

    def test_faceted_sphere_surface_is_visible(self):
        """볼록한 다면체 구의 텍셀은 거의 모두 어느 한 뷰에서 보임"""
        mesh = prepare_mesh(uv_sphere(16, 8))
        tm = build_texel_map(mesh, 32, 32)
        views = [make_view(mesh, cam) for cam in make_view_ring(6, width=96, height=96)]
        samples = sample_center_colors(tm, views)
        self.assertGreaterEqual(float(samples.ok.any(axis=0).mean()), 0.99)

    def test_face_normal_is_flat(self):
        mesh = prepare_mesh(uv_sphere(16, 8))
        gbuf = render_gbuffer(mesh, Camera(position=(0, 0, 2), width=64, height=64))
        fg = gbuf.mask
        fids = gbuf.face_id[fg]
        # 같은 면의 픽셀은 같은 평면 법선
        first = {}
        for f, n in zip(fids, gbuf.face_normal[fg]):
            np.testing.assert_allclose(n, first.setdefault(f, n), atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(gbuf.face_normal[fg], axis=1), 1.0, atol=1e-9)

    def test_outside_image(self):
        gbuf = render_gbuffer(compute_normals(quad()), self.cam)
        self.assertFalse(visibility_test(gbuf, self.cam, (5.0, 0.0, 0.0)))
        self.assertFalse(visibility_test(gbuf, self.cam, (0.0, 0.0, 3.0)))


class TestGather(unittest.TestCase):
    """K x K 이웃 수집"""

    def setUp(self):
        self.mesh = compute_normals(quad())
        self.tm = build_texel_map(self.mesh, 8, 8)
        self.front = make_view(self.mesh, Camera(position=(0, 0, 2), width=64, height=64))

    def test_single_view_k1(self):
        geo = GeodesicCache(self.mesh, radius=0.5)
        result = gather_neighborhoods(self.tm, [self.front], geo, K=1)
        self.assertEqual(result.texel_count, 64)
        np.testing.assert_array_equal(result.counts(), np.ones(64, dtype=np.int64))
        self.assertTrue(result.use_geodesics)
        # 텍셀과 같은 면에 떨어진 픽셀은 표면 위 직선 거리 ≈ 0
        texel_face = self.tm.face_id[result.texel_rows, result.texel_cols]
        pixel_face = self.front.gbuffer.face_id[result.pixel[:, 0], result.pixel[:, 1]]
        same = texel_face == pixel_face
        self.assertGreater(int(same.sum()), 32)
        self.assertTrue((result.geodesic[same] < 0.05).all())
        self.assertTrue((result.geodesic <= 0.5).all())
        self.assertTrue((result.ndotv > 0.9).all())
        np.testing.assert_allclose(result.color, np.tile([0.2, 0.4, 0.6], (64, 1)))

    def test_far_side_texels_are_empty(self):
        mesh = prepare_mesh(uv_sphere(32, 16))
        tm = build_texel_map(mesh, 32, 32)
        view = make_view(mesh, Camera(position=(0, 0, 2), width=128, height=128))
        result = gather_neighborhoods(tm, [view], None, K=3)
        back = result.texel_position[:, 2] < -0.2
        self.assertTrue(back.any())
        self.assertTrue((result.counts()[back] == 0).all())
        front = result.texel_position[:, 2] > 0.4
        self.assertGreater(float((result.counts()[front] > 0).mean()), 0.9)

    def test_two_of_six_views(self):
        side = make_view(self.mesh, Camera(position=(0.3, 0.0, 2.0), width=64, height=64))
        away = [make_view(self.mesh, Camera(position=(0, 0, 2), look_at=(0, 0, 5), width=64, height=64))
                for _ in range(4)]
        result = gather_neighborhoods(self.tm, [self.front, away[0], side] + away[1:], None, K=3)
        center = int(np.nonzero((result.texel_rows == 3) & (result.texel_cols == 3))[0][0])
        ns = result.neighbor_set(center)
        self.assertEqual(len(ns.records), 18)
        self.assertEqual(sorted({r.view_id for r in ns.records}), [0, 2])
        self.assertFalse(result.use_geodesics)
        np.testing.assert_array_equal(result.geodesic, 0.0)

    def test_record_order(self):
        result = gather_neighborhoods(self.tm, [self.front, self.front], None, K=3)
        texel_of = np.repeat(np.arange(result.texel_count), result.counts())
        keys = np.stack([texel_of, result.view_id, result.pixel[:, 0], result.pixel[:, 1]], axis=1)
        order = np.lexsort(keys.T[::-1])
        np.testing.assert_array_equal(order, np.arange(len(order)))

    def test_even_k_rejected(self):
        with self.assertRaises(UsageError):
            gather_neighborhoods(self.tm, [self.front], None, K=2)

    def test_select_and_recolor(self):
        result = gather_neighborhoods(self.tm, [self.front], None, K=3)
        sub = result.select(np.array([5, 2]))
        self.assertEqual(sub.texel_count, 2)
        self.assertEqual(sub.record_count, int(result.counts()[[5, 2]].sum()))
        self.assertEqual(sub.texel_rows[0], result.texel_rows[5])

        red = self.front.with_image(np.where(self.front.gbuffer.mask[..., None], [1.0, 0.0, 0.0], 0.0))
        recolored = result.with_colors([red])
        np.testing.assert_array_equal(recolored.color, np.tile([1.0, 0, 0], (result.record_count, 1)))
        np.testing.assert_array_equal(recolored.pixel, result.pixel)

    def test_workers_give_identical_geodesics(self):
        geo = GeodesicCache(self.mesh, radius=0.5)
        a = gather_neighborhoods(self.tm, [self.front], geo, K=3, workers=1)
        b = gather_neighborhoods(self.tm, [self.front], GeodesicCache(self.mesh, radius=0.5), K=3, workers=3)
        np.testing.assert_array_equal(a.geodesic, b.geodesic)
        np.testing.assert_array_equal(a.offsets, b.offsets)

    def test_view_size_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            ViewBundle(self.front.camera, np.zeros((10, 10, 3)), self.front.gbuffer)


if __name__ == "__main__":
    print("=" * 60)
    print("이웃 수집 테스트")
    print("=" * 60)
    unittest.main(verbosity=2)
