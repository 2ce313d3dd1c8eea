"""
구멍 채우기 테스트
- 채워진 텍셀 보존, 차트 간 색 번짐 없음, 시드 없는 차트 처리
"""
import unittest

import numpy as np

from core.inpaint import inpaint_pullpush, pull_push, texel_charts
from core.texture import Texture
from geometry.mesh import build_texel_map, compute_normals
from geometry.primitives import cube, quad
from utils.errors import InpaintError
from utils.logger import logger

RED = (1.0, 0.0, 0.0)
GREEN = (0.0, 1.0, 0.0)
BLUE = (0.0, 0.0, 1.0)


class TestPullPush(unittest.TestCase):
    """단일 영역 pull-push"""

    def test_filled_texels_unchanged(self):
        rng = np.random.default_rng(0)
        colors = rng.uniform(0, 1, (7, 5, 3))
        filled = rng.uniform(size=(7, 5)) > 0.4
        filled[0, 0] = True
        out = pull_push(colors, filled)
        np.testing.assert_array_equal(out[filled], colors[filled])
        self.assertTrue(np.isfinite(out).all())

    def test_nothing_filled(self):
        with self.assertRaises(InpaintError):
            pull_push(np.zeros((4, 4, 3)), np.zeros((4, 4), dtype=bool))


class TestInpaintQuad(unittest.TestCase):
    """단일 차트 (사각형)"""

    def setUp(self):
        self.mesh = compute_normals(quad())
        self.tm = build_texel_map(self.mesh, 8, 8)

    def test_full_coverage_is_identity(self):
        colors = np.random.default_rng(1).uniform(0, 1, (8, 8, 3))
        tex = Texture.from_colors(colors, self.tm)
        out = inpaint_pullpush(tex, self.tm, self.mesh)
        np.testing.assert_array_equal(out.colors, tex.colors)
        np.testing.assert_array_equal(out.filled, tex.filled)

    def test_single_hole_takes_surrounding_color(self):
        colors = np.tile(RED, (8, 8, 1))
        filled = np.ones((8, 8), dtype=bool)
        filled[3, 4] = False
        tex = Texture.from_colors(colors, self.tm, filled)
        self.assertFalse(tex.filled[3, 4])
        out = inpaint_pullpush(tex, self.tm, self.mesh)
        self.assertTrue(out.filled[3, 4])
        np.testing.assert_allclose(out.colors[3, 4], RED, atol=1e-12)

    def test_empty_texture(self):
        with self.assertRaises(InpaintError):
            inpaint_pullpush(Texture.empty(self.tm), self.tm, self.mesh)

    def test_needs_chart_information(self):
        tex = Texture.from_colors(np.ones((8, 8, 3)), self.tm)
        with self.assertRaises(InpaintError):
            inpaint_pullpush(tex, self.tm)


class TestInpaintCharts(unittest.TestCase):
    """여러 차트 (큐브 6면)"""

    def setUp(self):
        self.mesh = compute_normals(cube(2))
        self.tm = build_texel_map(self.mesh, 30, 20)
        self.count, self.charts = texel_charts(self.mesh, self.tm)

    def paint(self, chart_colors):
        colors = np.zeros((20, 30, 3))
        for chart, color in chart_colors.items():
            colors[self.charts == chart] = color
        return colors

    def test_six_charts(self):
        self.assertEqual(self.count, 6)
        np.testing.assert_array_equal(self.charts >= 0, self.tm.valid)

    def test_colors_do_not_cross_charts(self):
        colors = self.paint({c: (BLUE if c == 0 else GREEN) for c in range(6)})
        filled = self.tm.valid.copy()
        rows, cols = np.nonzero(self.charts == 0)
        holes = np.arange(0, len(rows), 3)         # 경계 텍셀 포함 1/3 을 비움
        filled[rows[holes], cols[holes]] = False
        tex = Texture.from_colors(colors, self.tm, filled)

        out = inpaint_pullpush(tex, self.tm, self.mesh)
        np.testing.assert_allclose(out.colors[rows[holes], cols[holes]],
                                   np.tile(BLUE, (len(holes), 1)), atol=1e-12)
        self.assertTrue((out.colors[rows, cols][:, 1] == 0.0).all())
        np.testing.assert_array_equal(out.filled, self.tm.valid)

    def test_charts_argument_matches_mesh(self):
        colors = self.paint({c: np.full(3, c / 6.0) for c in range(6)})
        filled = self.tm.valid & (np.arange(30)[None, :] % 2 == 0)
        tex = Texture.from_colors(colors, self.tm, filled)
        a = inpaint_pullpush(tex, self.tm, self.mesh)
        b = inpaint_pullpush(tex, self.tm, charts=self.charts)
        np.testing.assert_array_equal(a.colors, b.colors)

    def test_chart_without_seed_uses_global_fill(self):
        colors = self.paint({c: RED for c in range(6)})
        filled = self.tm.valid & (self.charts != 4)
        tex = Texture.from_colors(colors, self.tm, filled)
        with self.assertLogs(logger, level='WARNING'):
            out = inpaint_pullpush(tex, self.tm, self.mesh)
        orphan = self.charts == 4
        self.assertTrue(out.filled[orphan].all())
        np.testing.assert_allclose(out.colors[orphan], np.tile(RED, (int(orphan.sum()), 1)), atol=1e-12)
        self.assertFalse((out.filled & ~self.tm.valid).any())


if __name__ == "__main__":
    print("=" * 60)
    print("구멍 채우기 테스트")
    print("=" * 60)
    unittest.main(verbosity=2)
