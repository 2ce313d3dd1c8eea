"""
학습 루프 테스트
- 결정성 (workers=1), 학습률 0 이면 가중치 불변
- 손실 감소, 체크포인트/손실 곡선 저장, 발산 처리
"""
import csv
import tempfile
import unittest
from pathlib import Path

import numpy as np

from core.config import TrainConfig
from core.synthetic import make_synthetic_scene, standard_corpus
from core.trainer import (
    _epoch_items, holdout_eval, holdout_l1, prepare_dataset, smoothed, to_training_scene, train,
)
from geometry.raster import make_eval_views
from neural.network import NetArch, init_weights
from neural.weights_io import load_weights
from utils.constants import LOSS_CSV_COLUMNS
from utils.errors import EmptyDatasetError, TrainingDivergedError, UsageError


def small_config(**overrides) -> TrainConfig:
    values = dict(batch_size=2, epochs=2, learning_rate=1e-2, texels_per_item=16, texels_per_scene=64,
                  texture_size=16, view_resolution=32, use_geodesics=False, scene_count=2, seed=5)
    values.update(overrides)
    return TrainConfig(**values)


class TestTraining(unittest.TestCase):
    """미니배치 Adam 학습"""

    @classmethod
    def setUpClass(cls):
        cls.cfg = small_config()
        cls.dataset = prepare_dataset(standard_corpus(2, seed=0), cls.cfg)

    def test_dataset(self):
        self.assertEqual(len(self.dataset), 2)
        for scene in self.dataset:
            self.assertGreater(len(scene.candidates), 0)
            self.assertEqual(scene.targets.shape, (scene.gathered.texel_count, 3))

    def test_deterministic(self):
        a = train(self.dataset, self.cfg)
        b = train(self.dataset, self.cfg)
        self.assertTrue(a.weights.equals(b.weights))
        self.assertEqual(a.loss_curve, b.loss_curve)

    def test_zero_learning_rate_keeps_weights(self):
        cfg = small_config(learning_rate=0.0, epochs=1)
        result = train(self.dataset, cfg)
        self.assertTrue(result.weights.equals(init_weights(NetArch(), cfg.seed)))
        self.assertGreater(len(result.loss_curve), 0)

    def test_loss_decreases(self):
        cfg = small_config(epochs=4, augment_fraction=0.0, seeded_fraction=0.0)
        start = init_weights(NetArch(), cfg.seed)
        result = train(self.dataset, cfg)
        self.assertLess(holdout_l1(result.weights, self.dataset), holdout_l1(start, self.dataset))

    def test_max_steps(self):
        result = train(self.dataset, self.cfg, max_steps=1)
        self.assertEqual(len(result.loss_curve), 1)
        self.assertEqual(result.loss_curve[0][:2], (1, 1))

    def test_outputs_written(self):
        with tempfile.TemporaryDirectory() as tmp:
            result = train(self.dataset, self.cfg, output_dir=tmp, holdout=self.dataset)
            out = Path(tmp)
            for name in ('final.stxw', 'best.stxw', 'epoch_001.stxw', 'epoch_002.stxw', 'loss_curve.csv'):
                self.assertTrue((out / name).exists(), name)
            self.assertTrue(load_weights(out / 'final.stxw').equals(result.weights))
            self.assertTrue(load_weights(out / 'best.stxw').equals(result.best_weights))
            with open(out / 'loss_curve.csv', newline='', encoding='utf-8') as f:
                rows = list(csv.reader(f))
            self.assertEqual(rows[0], LOSS_CSV_COLUMNS)
            self.assertEqual(len(rows) - 1, len(result.loss_curve))
        self.assertEqual(len(result.holdout_l1), 2)
        self.assertIn(result.best_epoch, (1, 2))

    def test_divergence(self):
        bad = init_weights(NetArch(), 0)
        bad.tensors['dec.b2'][0] = np.nan
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(TrainingDivergedError) as ctx:
                train(self.dataset, self.cfg, output_dir=tmp, weights=bad)
            self.assertTrue((Path(tmp) / 'last_good.stxw').exists())
        self.assertIs(ctx.exception.last_good, bad)
        self.assertEqual(ctx.exception.exit_code, 4)

    def test_seeded_items_use_baseline(self):
        scene = self.dataset[0]
        self.assertEqual(scene.baseline.shape, scene.targets.shape)
        self.assertTrue(scene.baseline[scene.candidates].any())
        self.assertTrue(((scene.baseline >= 0.0) & (scene.baseline <= 1.0)).all())

        seeded = _epoch_items([scene], small_config(augment_fraction=0.0, seeded_fraction=1.0),
                              np.random.default_rng(0))
        for _, texels, _, current in seeded:
            np.testing.assert_array_equal(current, scene.baseline[texels])

        black = _epoch_items([scene], small_config(augment_fraction=0.0, seeded_fraction=0.0),
                             np.random.default_rng(0))
        for _, _, _, current in black:
            np.testing.assert_array_equal(current, 0.0)

    def test_seeded_training_is_deterministic(self):
        cfg = small_config(seeded_fraction=1.0, epochs=1)
        a = train(self.dataset, cfg)
        b = train(self.dataset, cfg)
        self.assertEqual(a.loss_curve, b.loss_curve)

    def test_empty_dataset(self):
        with self.assertRaises(EmptyDatasetError):
            train([], self.cfg)


class TestHoldout(unittest.TestCase):
    """평가 장면 비교"""

    @classmethod
    def setUpClass(cls):
        cls.sample = make_synthetic_scene('sphere', 'gradient', resolution=16, seed=1000,
                                          view_resolution=32, geodesics=False)
        cls.cameras = make_eval_views(2, width=24, height=24)

    def test_rows_per_scene(self):
        rows = holdout_eval(None, [self.sample], use_geodesics=False, eval_cameras=self.cameras)
        self.assertEqual([r['strategy'] for r in rows], ['frontfacing', 'average', 'weighted'])
        rows = holdout_eval(init_weights(), [self.sample], use_geodesics=False, eval_cameras=self.cameras)
        self.assertEqual(len(rows), 4)
        self.assertEqual(rows[-1]['strategy'], 'neural')

    def test_holdout_l1_is_finite(self):
        scene = to_training_scene(self.sample, K=3, use_geodesics=False)
        value = holdout_l1(init_weights(), [scene])
        self.assertTrue(0.0 <= value <= 1.0)

    def test_empty(self):
        with self.assertRaises(EmptyDatasetError):
            holdout_eval(None, [])


class TestTrainConfig(unittest.TestCase):
    """학습 설정 검증 / 보조 함수"""

    def test_invalid_values(self):
        with self.assertRaises(UsageError):
            TrainConfig(batch_size=0)
        with self.assertRaises(UsageError):
            TrainConfig(learning_rate=-1.0)
        with self.assertRaises(UsageError):
            TrainConfig(augment_range=(0.8, 0.2))
        with self.assertRaises(UsageError):
            TrainConfig(seeded_fraction=1.5)

    def test_smoothed(self):
        np.testing.assert_allclose(smoothed([1, 2, 3, 4], window=2), [1.5, 2.5, 3.5])
        np.testing.assert_array_equal(smoothed([1.0, 2.0], window=5), [1.0, 2.0])


if __name__ == "__main__":
    print("=" * 60)
    print("학습 루프 테스트")
    print("=" * 60)
    unittest.main(verbosity=2)
