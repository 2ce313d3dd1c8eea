"""
검증기 테스트
- BaseValidator 공통 동작 (validate / validate_full / require)
- 설정 / 아틀라스 / 가중치 검증기
"""
import unittest
from types import SimpleNamespace

import numpy as np

from geometry.mesh import AtlasReport
from neural.network import NetArch, init_weights
from utils.errors import DataError, NumericError, UsageError
from utils.logger import logger
from validators import (
    AtlasValidator, BaseValidator, ConfigValidator, ReferencedFilesValidator, WeightsValidator,
)


class PositiveValidator(BaseValidator):
    """양수만 통과, 100 이상은 경고"""

    def problems(self, value):
        return [] if value > 0 else [f"양수가 아닙니다: {value}"]

    def warnings(self, value):
        return ["값이 큽니다"] if value >= 100 else []


class TestBaseValidator(unittest.TestCase):
    """공통 인터페이스"""

    def test_validate_and_full(self):
        v = PositiveValidator()
        self.assertTrue(v.validate(3))
        self.assertFalse(v.validate(-1))
        self.assertEqual(v.validate_full(150), (True, [], ["값이 큽니다"]))
        ok, problems, notes = v.validate_full(-5)
        self.assertFalse(ok)
        self.assertEqual(len(problems), 1)
        self.assertEqual(notes, [])

    def test_require(self):
        v = PositiveValidator()
        self.assertEqual(v.require(7), 7)
        with self.assertRaises(DataError) as ctx:
            v.require(0, 'count')
        self.assertTrue(str(ctx.exception).startswith('count: '))
        with self.assertLogs(logger, level='WARNING'):
            v.require(500)

    def test_helpers(self):
        self.assertTrue(BaseValidator.is_power_of_two(64))
        self.assertFalse(BaseValidator.is_power_of_two(96))
        self.assertFalse(BaseValidator.is_power_of_two(0))
        self.assertTrue(BaseValidator.in_range(1.0, 0.0, 1.0))
        self.assertFalse(BaseValidator.in_range(1.0, 0.0, 1.0, hi_inclusive=False))
        self.assertFalse(BaseValidator.is_finite([1.0, np.nan]))


class TestConfigValidator(unittest.TestCase):
    """설정 필드 범위"""

    def test_fields_are_checked_when_present(self):
        v = ConfigValidator()
        self.assertTrue(v.validate(SimpleNamespace()))
        self.assertTrue(v.validate(SimpleNamespace(K=3, thr=0.1, strategy='weighted', schedule='paint3d')))
        for bad in ({'K': 4}, {'K': 0}, {'thr': 1.0}, {'power': -0.5}, {'geodesic_radius': 0.0},
                    {'strategy': 'median'}, {'schedule': 'spiral'}, {'texture_width': 0},
                    {'batch_size': 0}, {'augment_range': (0.5, 0.2)}, {'augment_fraction': 1.5},
                    {'seeded_fraction': -0.1}, {'scene_kinds': ['teapot']}, {'patterns': ['plaid']}):
            self.assertFalse(v.validate(SimpleNamespace(**bad)), bad)

    def test_error_class_and_warning(self):
        with self.assertRaises(UsageError):
            ConfigValidator().require(SimpleNamespace(K=2))
        ok, _, notes = ConfigValidator().validate_full(SimpleNamespace(texture_width=100))
        self.assertTrue(ok)
        self.assertEqual(len(notes), 1)

    def test_missing_files(self):
        cfg = SimpleNamespace(mesh='/nonexistent/mesh.obj')
        self.assertTrue(ConfigValidator().validate(cfg))
        self.assertFalse(ConfigValidator(check_files=True).validate(cfg))

    def test_referenced_files_are_data_errors(self):
        v = ReferencedFilesValidator()
        self.assertTrue(v.validate(SimpleNamespace(mesh=None, camera_file=None, weights=None)))
        self.assertTrue(v.validate(SimpleNamespace()))
        with self.assertRaises(DataError):
            v.require(SimpleNamespace(weights='/nonexistent/best.stxw'))


class TestAtlasValidator(unittest.TestCase):
    """아틀라스 보고서"""

    def test_overlap_is_fatal(self):
        self.assertFalse(AtlasValidator().validate(AtlasReport(2, 5, True, [0.2, 0.3])))
        self.assertFalse(AtlasValidator().validate(AtlasReport(0, 0, False, [])))

    def test_empty_chart_warns(self):
        ok, problems, notes = AtlasValidator().validate_full(AtlasReport(2, 0, False, [0.4, 0.0]))
        self.assertTrue(ok)
        self.assertEqual(problems, [])
        self.assertEqual(len(notes), 1)


class TestWeightsValidator(unittest.TestCase):
    """가중치 유한성"""

    def test_finite_weights_pass(self):
        self.assertTrue(WeightsValidator().validate(init_weights()))

    def test_nan_names_tensor(self):
        w = init_weights()
        w.tensors['block1.Q'][0, 0] = np.inf
        with self.assertRaises(NumericError) as ctx:
            WeightsValidator().require(w)
        self.assertIn('block1.Q', str(ctx.exception))

    def test_small_dimension_warns(self):
        ok, _, notes = WeightsValidator().validate_full(init_weights(NetArch(dim=8, hidden=8)))
        self.assertTrue(ok)
        self.assertEqual(len(notes), 1)


if __name__ == "__main__":
    print("=" * 60)
    print("검증기 테스트")
    print("=" * 60)
    unittest.main(verbosity=2)
