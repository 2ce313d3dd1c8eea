"""
검증기 기본 클래스

[역할]
- 공통 인터페이스 정의 (validate / validate_full / require)
- 공통 수치 검사 헬퍼 (유한성, 범위, 2의 거듭제곱)
"""
from abc import ABC, abstractmethod
from typing import Any, List, Tuple, Type

import numpy as np

from utils.errors import DataError, TexelFusionError
from utils.logger import logger


class BaseValidator(ABC):
    """검증기 기본 클래스"""

    # require() 실패 시 던질 예외
    error_class: Type[TexelFusionError] = DataError

    @abstractmethod
    def problems(self, value: Any) -> List[str]:
        """
        치명적인 문제 목록

        Returns:
            문제 설명 목록 (비어 있으면 통과)
        """

    def warnings(self, value: Any) -> List[str]:
        """치명적이지 않은 경고 목록"""
        return []

    def validate(self, value: Any, context: str = "") -> bool:
        """기본 검증 - 문제가 없으면 True"""
        return not self.problems(value)

    def validate_full(self, value: Any, context: str = "") -> Tuple[bool, List[str], List[str]]:
        """
        전체 검증

        Returns:
            (is_valid, problems, warnings)
        """
        found = self.problems(value)
        notes = self.warnings(value) if not found else []
        return not found, found, notes

    def require(self, value: Any, context: str = "") -> Any:
        """문제가 있으면 error_class 예외, 경고는 로그로 남기고 값을 그대로 반환"""
        ok, found, notes = self.validate_full(value, context)
        prefix = f"{context}: " if context else ""
        if not ok:
            raise self.error_class(prefix + "; ".join(found))
        for note in notes:
            logger.warning(prefix + note)
        return value

    # =========================================================
    # 공통 헬퍼
    # =========================================================

    @staticmethod
    def is_finite(values) -> bool:
        return bool(np.isfinite(np.asarray(values, dtype=np.float64)).all())

    @staticmethod
    def in_range(value: float, lo: float, hi: float, hi_inclusive: bool = True) -> bool:
        return lo <= value <= hi if hi_inclusive else lo <= value < hi

    @staticmethod
    def is_power_of_two(n: int) -> bool:
        return n > 0 and (n & (n - 1)) == 0
