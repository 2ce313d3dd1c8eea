"""
메쉬 / 텍셀 맵 테스트
- OBJ 읽기 (팬 삼각분할, 인덱스 오류, UV 누락)
- 법선 계산, 정규화
- 역 UV 텍셀 맵 (채움 규칙, 왕복, 결정성, STXM 입출력)
"""
import tempfile
import unittest
from pathlib import Path

import numpy as np

from geometry.mesh import (
    build_atlas_report, build_mesh, build_texel_map, chart_labels, compute_normals, load_mesh,
    load_texel_map, normalize_mesh, prepare_mesh, save_mesh, save_texel_map,
)
from geometry.obj_io import parse_obj
from geometry.primitives import cube, quad, torus, uv_sphere
from utils.errors import AtlasRequiredError, DegenerateExtentError, MeshIndexError
from validators import AtlasValidator, MeshValidator

TRIANGLE_OBJ = """
v 0 0 0
v 1 0 0
v 0 1 0
vt 0 0
vt 1 0
vt 0 1
f 1/1 2/2 3/3
"""

CUBE_OBJ = """
v -1 -1 -1
v 1 -1 -1
v 1 1 -1
v -1 1 -1
v -1 -1 1
v 1 -1 1
v 1 1 1
v -1 1 1
vt 0 0
vt 1 0
vt 1 1
vt 0 1
f 1/1 4/2 3/3 2/4
f 5/1 6/2 7/3 8/4
f 1/1 2/2 6/3 5/4
f 2/1 3/2 7/3 6/4
f 3/1 4/2 8/3 7/4
f 4/1 1/2 5/3 8/4
"""


def lower_left_triangle():
    """UV 정사각형의 왼쪽 아래 절반을 덮는 삼각형 (3D 는 z=0 평면)"""
    return build_mesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)],
                      [(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])


def octahedron():
    axes = np.array([(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)], dtype=float)
    faces = []
    for x in (0, 1):
        for y in (2, 3):
            for z in (4, 5):
                tri = [x, y, z]
                c = axes[tri]
                if np.dot(np.cross(c[1] - c[0], c[2] - c[0]), c.mean(axis=0)) < 0:
                    tri = [x, z, y]
                faces.append(tri)
    uv = np.random.default_rng(0).uniform(0, 1, size=(6, 2))
    return build_mesh(axes, faces, uv, faces)


class TestObjLoading(unittest.TestCase):
    """OBJ 읽기"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, name, text):
        path = self.dir / name
        path.write_text(text, encoding='utf-8')
        return path

    def test_single_triangle(self):
        mesh = load_mesh(self.write('tri.obj', TRIANGLE_OBJ))
        self.assertEqual(mesh.face_count, 1)
        self.assertEqual(mesh.vertex_count, 3)

    def test_quads_are_fan_triangulated(self):
        mesh = load_mesh(self.write('cube.obj', CUBE_OBJ))
        self.assertEqual(mesh.vertex_count, 8)
        self.assertEqual(mesh.face_count, 12)
        # 첫 사각형 1-4-3-2 → (1,4,3), (1,3,2)
        np.testing.assert_array_equal(mesh.faces[0], [0, 3, 2])
        np.testing.assert_array_equal(mesh.faces[1], [0, 2, 1])

    def test_out_of_range_vertex_index(self):
        text = CUBE_OBJ.replace('f 1/1 4/2 3/3 2/4', 'f 1/1 99/2 3/3 2/4')
        with self.assertRaises(MeshIndexError):
            load_mesh(self.write('bad.obj', text))

    def test_missing_uv_requires_atlas(self):
        text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"
        with self.assertRaises(AtlasRequiredError):
            parse_obj(text)

    def test_negative_indices(self):
        text = TRIANGLE_OBJ.replace('f 1/1 2/2 3/3', 'f -3/-3 -2/-2 -1/-1')
        mesh = load_mesh(self.write('neg.obj', text))
        np.testing.assert_array_equal(mesh.faces[0], [0, 1, 2])

    def test_save_and_reload_is_lossless(self):
        mesh = prepare_mesh(torus(12, 6))
        path = self.dir / 'torus.obj'
        save_mesh(mesh, path)
        again = load_mesh(path)
        np.testing.assert_array_equal(again.vertices, mesh.vertices)
        np.testing.assert_array_equal(again.uv_coords, mesh.uv_coords)
        self.assertEqual(again.content_hash(), mesh.content_hash())

    def test_non_manifold_is_flagged(self):
        faces = [(0, 1, 2), (0, 1, 3), (0, 1, 4)]
        verts = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1)]
        mesh = build_mesh(verts, faces, [(0, 0)] * 5, faces)
        self.assertTrue(mesh.non_manifold)


class TestNormals(unittest.TestCase):
    """면적 가중 정점 법선"""

    def test_planar_square(self):
        mesh = compute_normals(quad())
        np.testing.assert_allclose(mesh.vertex_normals, np.tile([0.0, 0.0, 1.0], (4, 1)), atol=1e-12)

    def test_octahedron_normals_match_positions(self):
        mesh = compute_normals(octahedron())
        expected = mesh.vertices / np.linalg.norm(mesh.vertices, axis=1, keepdims=True)
        np.testing.assert_allclose(mesh.vertex_normals, expected, atol=1e-9)

    def test_unit_length(self):
        mesh = compute_normals(uv_sphere(16, 8))
        np.testing.assert_allclose(np.linalg.norm(mesh.vertex_normals, axis=1), 1.0, atol=1e-6)

    def test_degenerate_face_contributes_nothing(self):
        verts = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (5, 5, 5)]
        faces = [(0, 1, 2), (0, 0, 3)]
        mesh = compute_normals(build_mesh(verts, faces, [(0, 0)] * 4, faces))
        np.testing.assert_allclose(mesh.vertex_normals[0], [0, 0, 1], atol=1e-12)

    def test_isolated_vertex_gets_default_normal(self):
        verts = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (3, 3, 3)]
        mesh = compute_normals(build_mesh(verts, [(0, 1, 2)], [(0, 0)] * 4, [(0, 1, 2)]))
        np.testing.assert_array_equal(mesh.vertex_normals[3], [0.0, 0.0, 1.0])


class TestNormalize(unittest.TestCase):
    """원점 중심 단위 상자 정규화"""

    def test_one_dimensional_extent(self):
        mesh = build_mesh([(0, 0, 0), (2, 0, 0), (1, 0, 0)], [(0, 1, 2)], [(0, 0)] * 3, [(0, 1, 2)])
        out = normalize_mesh(mesh)
        np.testing.assert_allclose(out.vertices[:2], [(-0.5, 0, 0), (0.5, 0, 0)], atol=1e-12)

    def test_box_extents(self):
        verts = [(10, 10, 10), (12, 11, 10.5), (11, 10.5, 10.2)]
        out = normalize_mesh(build_mesh(verts, [(0, 1, 2)], [(0, 0)] * 3, [(0, 1, 2)]))
        extent = out.vertices.max(axis=0) - out.vertices.min(axis=0)
        np.testing.assert_allclose(extent, [1.0, 0.5, 0.25], atol=1e-12)
        center = 0.5 * (out.vertices.max(axis=0) + out.vertices.min(axis=0))
        np.testing.assert_allclose(center, 0.0, atol=1e-12)

    def test_idempotent(self):
        once = normalize_mesh(torus(12, 6))
        twice = normalize_mesh(once)
        np.testing.assert_allclose(twice.vertices, once.vertices, atol=1e-6)

    def test_coincident_vertices(self):
        mesh = build_mesh([(1, 1, 1)] * 3, [(0, 1, 2)], [(0, 0)] * 3, [(0, 1, 2)])
        with self.assertRaises(DegenerateExtentError):
            normalize_mesh(mesh)


class TestTexelMap(unittest.TestCase):
    """역 UV 텍셀 맵"""

    def test_lower_left_half_has_ten_texels(self):
        tm = build_texel_map(compute_normals(lower_left_triangle()), 4, 4)
        self.assertEqual(tm.valid_count, 10)

    def test_positions_on_face_plane(self):
        tm = build_texel_map(compute_normals(quad()), 16, 16)
        self.assertEqual(tm.valid_count, 256)
        np.testing.assert_allclose(tm.position[tm.valid][:, 2], 0.0, atol=1e-12)
        np.testing.assert_allclose(tm.normal[tm.valid], np.tile([0, 0, 1.0], (256, 1)), atol=1e-12)

    def test_shared_edge_owned_once(self):
        # quad 의 대각선 위에 놓이는 텍셀 중심도 한 면에만 속한다
        tm = build_texel_map(compute_normals(quad()), 8, 8)
        self.assertEqual(tm.overlap_texel_count, 0)
        self.assertEqual(tm.valid_count, 64)

    def test_barycentric_and_round_trip(self):
        mesh = prepare_mesh(torus(16, 8))
        tm = build_texel_map(mesh, 64, 64)
        rows, cols = tm.valid_indices()
        bary = tm.bary[rows, cols]
        self.assertTrue((bary >= 0).all())
        np.testing.assert_allclose(bary.sum(axis=1), 1.0, atol=1e-6)

        faces = tm.face_id[rows, cols]
        pos = np.einsum('nk,nkd->nd', bary, mesh.vertices[mesh.faces[faces]])
        np.testing.assert_allclose(pos, tm.position[rows, cols], atol=1e-6)

        uv = np.einsum('nk,nkd->nd', bary, mesh.uv_coords[mesh.face_uv_indices[faces]])
        centers = tm.texel_uv(rows, cols)
        self.assertTrue((np.abs(uv - centers) * 64 <= 0.5 + 1e-9).all())

    def test_deterministic(self):
        mesh = prepare_mesh(uv_sphere(12, 6))
        a = build_texel_map(mesh, 32, 32)
        b = build_texel_map(mesh, 32, 32)
        np.testing.assert_array_equal(a.face_id, b.face_id)
        np.testing.assert_array_equal(a.bary, b.bary)
        np.testing.assert_array_equal(a.position, b.position)

    def test_overlapping_charts_last_writer_wins(self):
        verts = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1), (0, 1, 1)]
        faces = [(0, 1, 2), (3, 4, 5)]
        uv_idx = [(0, 1, 2), (0, 1, 2)]
        mesh = compute_normals(build_mesh(verts, faces, [(0, 0), (1, 0), (0, 1)], uv_idx))
        tm = build_texel_map(mesh, 4, 4)
        self.assertEqual(tm.overlap_texel_count, 10)
        self.assertTrue((tm.face_id[tm.valid] == 1).all())
        report = build_atlas_report(mesh, tm)
        self.assertTrue(report.uv_reuse)
        self.assertFalse(report.is_valid)
        ok, problems, _ = AtlasValidator().validate_full(report)
        self.assertFalse(ok)
        self.assertTrue(problems)

    def test_stxm_round_trip(self):
        mesh = prepare_mesh(cube(2))
        tm = build_texel_map(mesh, 16, 16)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'map.stxm'
            save_texel_map(tm, path)
            again = load_texel_map(path)
        np.testing.assert_array_equal(again.valid, tm.valid)
        np.testing.assert_array_equal(again.face_id, tm.face_id)
        np.testing.assert_allclose(again.position, tm.position, atol=1e-6)


class TestAtlas(unittest.TestCase):
    """차트 / 아틀라스 보고서"""

    def test_chart_counts(self):
        self.assertEqual(chart_labels(cube(2))[0], 6)
        self.assertEqual(chart_labels(uv_sphere(12, 6))[0], 1)

    def test_torus_atlas_has_no_overlap(self):
        mesh = prepare_mesh(torus(24, 12))
        report = build_atlas_report(mesh, build_texel_map(mesh, 64, 64))
        self.assertEqual(report.overlap_texel_count, 0)
        self.assertTrue(report.is_valid)
        self.assertEqual(report.chart_count, 1)
        self.assertTrue(AtlasValidator().validate(report))

    def test_mesh_validator_warns_on_uv_range(self):
        mesh = build_mesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 2)],
                          [(0, 0), (1.5, 0), (0, 1)], [(0, 1, 2)])
        ok, problems, notes = MeshValidator().validate_full(mesh)
        self.assertTrue(ok)
        self.assertEqual(problems, [])
        self.assertTrue(any('UV' in n for n in notes))


if __name__ == "__main__":
    print("=" * 60)
    print("메쉬 / 텍셀 맵 테스트")
    print("=" * 60)
    unittest.main(verbosity=2)
