"""
합성 장면 / 외형 교란 테스트
"""
import unittest

import numpy as np

from core.synthetic import (
    augment_views, holdout_corpus, make_scenes, make_synthetic_scene, mean_color_deviation,
    paint_texture, standard_corpus,
)
from geometry.mesh import build_texel_map, prepare_mesh
from geometry.primitives import torus
from utils.constants import AUGMENT_WARP_MAGNITUDE, HOLDOUT_SEED
from utils.errors import UsageError


class TestPatterns(unittest.TestCase):
    """절차적 패턴 텍스처"""

    @classmethod
    def setUpClass(cls):
        cls.tm = build_texel_map(prepare_mesh(torus(24, 12)), 32, 32)

    def test_every_valid_texel_painted(self):
        for pattern in ('checker', 'stripes', 'noise', 'gradient'):
            tex = paint_texture(self.tm, pattern, seed=1)
            np.testing.assert_array_equal(tex.filled, self.tm.valid)
            colors = tex.colors[tex.filled]
            self.assertTrue(((colors >= 0.0) & (colors <= 1.0)).all(), pattern)

    def test_deterministic_per_seed(self):
        a = paint_texture(self.tm, 'noise', seed=4)
        b = paint_texture(self.tm, 'noise', seed=4)
        c = paint_texture(self.tm, 'noise', seed=5)
        np.testing.assert_array_equal(a.colors, b.colors)
        self.assertFalse(np.array_equal(a.colors, c.colors))

    def test_unknown_pattern(self):
        with self.assertRaises(UsageError):
            paint_texture(self.tm, 'plaid', 0)


class TestScenes(unittest.TestCase):
    """장면 생성 / 교란"""

    @classmethod
    def setUpClass(cls):
        cls.sample = make_synthetic_scene('torus', 'checker', resolution=16, seed=2,
                                          view_resolution=32, geodesics=False)

    def test_scene_contents(self):
        s = self.sample
        self.assertEqual(s.name, 'torus-checker-2')
        self.assertEqual(len(s.views), 6)
        self.assertEqual(len(s.cameras), 6)
        self.assertIsNone(s.geo)
        for view in s.views:
            self.assertEqual(view.image.shape, (32, 32, 3))
            self.assertTrue(view.gbuffer.mask.any())
            np.testing.assert_array_equal(view.image[~view.gbuffer.mask], 0.0)

    def test_unknown_kind(self):
        with self.assertRaises(UsageError):
            make_synthetic_scene('teapot', 'checker')

    def test_zero_strength_is_identity(self):
        same = augment_views(self.sample, 0.0, seed=1)
        self.assertEqual(mean_color_deviation(same.views, self.sample.views), 0.0)

    def test_strength_controls_deviation(self):
        weak = augment_views(self.sample, 0.2, seed=1)
        strong = augment_views(self.sample, 0.7, seed=1)
        d_weak = mean_color_deviation(weak.views, self.sample.views)
        d_strong = mean_color_deviation(strong.views, self.sample.views)
        self.assertGreater(d_weak, 0.0)
        self.assertGreater(d_strong, d_weak)
        self.assertLessEqual(d_strong, AUGMENT_WARP_MAGNITUDE * 0.7 + 1e-9)
        # 기하는 그대로
        self.assertIs(weak.views[0].gbuffer, self.sample.views[0].gbuffer)

    def test_augment_deterministic(self):
        a = augment_views(self.sample, 0.5, seed=9)
        b = augment_views(self.sample, 0.5, seed=9)
        for va, vb in zip(a.views, b.views):
            np.testing.assert_array_equal(va.image, vb.image)

    def test_invalid_strength(self):
        with self.assertRaises(UsageError):
            augment_views(self.sample, 1.5, seed=0)


class TestCorpus(unittest.TestCase):
    """학습 / 평가 명세"""

    def test_standard_and_holdout_do_not_share_seeds(self):
        train = standard_corpus(8, seed=0)
        holdout = holdout_corpus(4)
        self.assertEqual(len(train), 8)
        self.assertEqual({k for k, _, _ in train}, {'sphere', 'torus', 'cube'})
        self.assertEqual(holdout[0][2], HOLDOUT_SEED)
        self.assertFalse({s for _, _, s in train} & {s for _, _, s in holdout})

    def test_make_scenes_keeps_order(self):
        specs = [('cube', 'gradient', 0), ('sphere', 'stripes', 1)]
        scenes = make_scenes(specs, resolution=8, view_resolution=16, geodesics=False, workers=2)
        self.assertEqual([s.name for s in scenes], ['cube-gradient-0', 'sphere-stripes-1'])


if __name__ == "__main__":
    print("=" * 60)
    print("합성 장면 테스트")
    print("=" * 60)
    unittest.main(verbosity=2)
