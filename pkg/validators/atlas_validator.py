"""
UV 아틀라스 검증기

AtlasReport 를 받아 텍셀 겹침(UV 재사용)과 빈 아틀라스를 판정한다
"""
from typing import List

from geometry.mesh import AtlasReport
from utils.errors import DataError
from .base_validator import BaseValidator


class AtlasValidator(BaseValidator):
    """아틀라스 보고서 검증 - 겹침은 치명적, 작은 차트는 경고"""

    error_class = DataError

    def __init__(self, min_chart_coverage: float = 0.0):
        self.min_chart_coverage = min_chart_coverage

    def problems(self, report: AtlasReport) -> List[str]:
        found = []
        if report.chart_count == 0:
            found.append("UV 차트가 없습니다")
        if report.overlap_texel_count > 0:
            found.append(f"겹치는 텍셀 {report.overlap_texel_count}개 (UV 재사용)")
        return found

    def warnings(self, report: AtlasReport) -> List[str]:
        notes = []
        if report.uv_reuse and report.overlap_texel_count == 0:
            notes.append("UV 모서리를 세 개 이상의 면이 공유합니다")
        empty = [k for k, c in enumerate(report.chart_coverage) if c <= self.min_chart_coverage]
        if empty:
            notes.append(f"텍셀이 없는 차트 {len(empty)}개 (해상도가 낮음)")
        return notes
