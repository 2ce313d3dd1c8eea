"""
카메라 / 래스터라이저 테스트
"""
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from core.texture import Texture
from geometry.mesh import build_mesh, build_texel_map, compute_normals, prepare_mesh
from geometry.primitives import quad, uv_sphere
from geometry.raster import (
    Camera, depth_visualization, load_gbuffer, make_eval_views, make_view_ring, project,
    render_gbuffer, render_textured, sample_texture, save_gbuffer,
)
from utils.errors import BehindCameraError, FormatError, UsageError


def two_quads():
    """z=0 의 큰 사각형과 z=0.5 의 작은 사각형 (면 2, 3 이 앞쪽)"""
    back, front = quad(1.0, 0.0), quad(0.5, 0.5)
    vertices = np.concatenate([back.vertices, front.vertices])
    faces = np.concatenate([back.faces, front.faces + 4])
    uv_idx = np.concatenate([back.face_uv_indices, front.face_uv_indices + 4])
    uv = np.concatenate([back.uv_coords, front.uv_coords])
    return compute_normals(build_mesh(vertices, faces, uv, uv_idx))


class TestCamera(unittest.TestCase):
    """카메라 / 투영"""

    def test_look_at_center(self):
        cam = Camera(position=(0, 0, 2), width=64, height=64)
        pixel, depth = project(cam, (0, 0, 0))
        np.testing.assert_allclose(pixel, [32, 32], atol=1e-9)
        self.assertAlmostEqual(depth, 2.0)

    def test_point_behind_camera(self):
        cam = Camera(position=(0, 0, 2))
        with self.assertRaises(BehindCameraError):
            project(cam, (0, 0, 3))

    def test_ninety_degree_fov(self):
        cam = Camera(position=(0, 0, 1), vertical_fov=math.radians(90.0), width=100, height=100)
        pixel, depth = project(cam, (0, 0.5, 0))
        np.testing.assert_allclose(pixel, [50, 25], atol=1e-9)
        self.assertAlmostEqual(depth, 1.0)

    def test_invalid_cameras(self):
        with self.assertRaises(UsageError):
            Camera(position=(0, 2, 0))          # 시선이 up 과 평행
        with self.assertRaises(UsageError):
            Camera(position=(0, 0, 2), near=1.0, far=0.5)
        with self.assertRaises(UsageError):
            Camera(position=(0, 0, 0))

    def test_dict_round_trip(self):
        cam = Camera(position=(0.5, 1.0, 2.0), width=48, height=32)
        again = Camera.from_dict(cam.to_dict())
        self.assertEqual(again.position, cam.position)
        self.assertEqual((again.width, again.height), (48, 32))
        self.assertAlmostEqual(again.vertical_fov, cam.vertical_fov)

    def test_dict_without_position(self):
        with self.assertRaises(FormatError):
            Camera.from_dict({'width': 10})


class TestViewRings(unittest.TestCase):
    """시점 배치"""

    def test_six_view_preset(self):
        cams = make_view_ring(6)
        self.assertEqual(len(cams), 6)
        for cam in cams:
            self.assertAlmostEqual(float(np.linalg.norm(cam.position)), 2.0)
        np.testing.assert_allclose(cams[0].position, [0, 0, 2], atol=1e-12)
        np.testing.assert_allclose(cams[1].position, [0, 0, -2], atol=1e-12)

    def test_eval_views_alternate_elevation(self):
        cams = make_eval_views(20, width=16, height=16)
        self.assertEqual(len(cams), 20)
        self.assertAlmostEqual(cams[0].position[1], 1.0)
        self.assertAlmostEqual(cams[1].position[1], -2.0 * math.sin(math.radians(15.0)))

    def test_zero_views(self):
        with self.assertRaises(UsageError):
            make_view_ring(0)


class TestRasterizer(unittest.TestCase):
    """G-버퍼 / 텍스처 렌더링"""

    def setUp(self):
        self.cam = Camera(position=(0, 0, 2), width=32, height=32)

    def test_constant_texture_render(self):
        mesh = compute_normals(quad())
        tm = build_texel_map(mesh, 8, 8)
        red = np.zeros((8, 8, 3))
        red[..., 0] = 1.0
        result = render_textured(mesh, Texture.from_colors(red, tm), self.cam)
        self.assertTrue(result.mask.any())
        self.assertEqual(result.invalid_texel_hits, 0)
        np.testing.assert_array_equal(result.image[result.mask], np.tile([1.0, 0, 0], (int(result.mask.sum()), 1)))
        np.testing.assert_array_equal(result.image[~result.mask], 0.0)

    def test_empty_texels_marked(self):
        mesh = compute_normals(quad())
        tm = build_texel_map(mesh, 8, 8)
        result = render_textured(mesh, Texture.empty(tm), self.cam)
        self.assertEqual(result.invalid_texel_hits, int(result.mask.sum()))

    def test_depth_test_keeps_nearest(self):
        mesh = two_quads()
        gbuf = render_gbuffer(mesh, self.cam)
        self.assertIn(int(gbuf.face_id[16, 16]), (2, 3))
        self.assertAlmostEqual(float(gbuf.depth[16, 16]), 1.5, places=9)
        np.testing.assert_allclose(gbuf.normal[16, 16], [0, 0, 1], atol=1e-9)
        # 모서리 부근은 뒤쪽 사각형
        self.assertIn(int(gbuf.face_id[16, 7]), (0, 1))

    def test_mask_matches_depth_and_face(self):
        gbuf = render_gbuffer(prepare_mesh(uv_sphere(16, 8)), self.cam)
        np.testing.assert_array_equal(gbuf.mask, np.isfinite(gbuf.depth))
        np.testing.assert_array_equal(gbuf.mask, gbuf.face_id >= 0)

    def test_workers_do_not_change_result(self):
        mesh = prepare_mesh(uv_sphere(16, 8))
        a = render_gbuffer(mesh, self.cam, workers=1)
        b = render_gbuffer(mesh, self.cam, workers=3)
        np.testing.assert_array_equal(a.depth, b.depth)
        np.testing.assert_array_equal(a.face_id, b.face_id)

    def test_gbuffer_round_trip(self):
        mesh = two_quads()
        gbuf = render_gbuffer(mesh, self.cam)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'view.stxg'
            save_gbuffer(gbuf, path)
            again = load_gbuffer(path, mesh)
        np.testing.assert_array_equal(again.mask, gbuf.mask)
        np.testing.assert_array_equal(again.face_id, gbuf.face_id)
        np.testing.assert_allclose(again.bary[gbuf.mask], gbuf.bary[gbuf.mask], atol=1e-4)

    def test_depth_visualization(self):
        gbuf = render_gbuffer(two_quads(), self.cam)
        vis = depth_visualization(gbuf, self.cam)
        self.assertEqual(vis[0, 0], 0.0)
        self.assertAlmostEqual(float(vis[16, 16]), 255.0 * (10.0 - 1.5) / 9.9, places=6)

    def test_sample_texture_nearest(self):
        colors = np.arange(12, dtype=float).reshape(2, 2, 3) / 12.0
        filled = np.array([[True, True], [True, False]])
        color, ok = sample_texture(colors, filled, np.array([[0.25, 0.25], [0.75, 0.75]]))
        np.testing.assert_array_equal(color[0], colors[0, 0])
        self.assertTrue(ok[0])
        self.assertFalse(ok[1])


if __name__ == "__main__":
    print("=" * 60)
    print("카메라 / 래스터라이저 테스트")
    print("=" * 60)
    unittest.main(verbosity=2)
