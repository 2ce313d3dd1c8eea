"""
네트워크 가중치 검증기
"""
from typing import List

import numpy as np

from neural.network import NetWeights
from utils.constants import FEATURE_DIM
from utils.errors import NumericError
from .base_validator import BaseValidator


class WeightsValidator(BaseValidator):
    """모든 텐서 유한성 + 구조 일치"""

    error_class = NumericError

    def problems(self, w: NetWeights) -> List[str]:
        found = []
        expected = w.arch.tensor_shapes()
        for name, value in w:
            if value.shape != expected.get(name):
                found.append(f"텐서 {name} 모양 {value.shape} != {expected.get(name)}")
            elif not np.isfinite(value).all():
                found.append(f"텐서 {name} 에 유한하지 않은 값이 있습니다")
        return found

    def warnings(self, w: NetWeights) -> List[str]:
        if w.arch.dim != FEATURE_DIM:
            return [f"특징 차원 {w.arch.dim} (기본값 {FEATURE_DIM} 과 다름)"]
        return []
