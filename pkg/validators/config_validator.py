"""
설정 검증기

PipelineConfig / TrainConfig 의 필드 범위를 검사한다.
설정 객체에 있는 필드만 검사하므로 두 설정 모두에 사용할 수 있다.
"""
from pathlib import Path
from typing import Any, List

from utils.constants import PATTERNS, SCENE_KINDS, SCHEDULE_PRESETS, STRATEGIES
from utils.errors import DataError, UsageError
from .base_validator import BaseValidator


class ConfigValidator(BaseValidator):
    """파이프라인/학습 설정 검증"""

    error_class = UsageError

    def __init__(self, check_files: bool = False):
        self.check_files = check_files

    def problems(self, cfg: Any) -> List[str]:
        found = []
        get = lambda name: getattr(cfg, name, None)  # noqa: E731

        K = get('K')
        if K is not None and (K < 1 or K % 2 == 0):
            found.append(f"K 는 1 이상의 홀수여야 합니다: {K}")
        thr = get('thr')
        if thr is not None and not self.in_range(thr, -1.0, 1.0, hi_inclusive=False):
            found.append(f"thr 는 [-1, 1) 범위여야 합니다: {thr}")
        power = get('power')
        if power is not None and power < 0:
            found.append(f"power 는 0 이상이어야 합니다: {power}")
        radius = get('geodesic_radius')
        if radius is not None and radius <= 0:
            found.append(f"지오데식 반경은 양수여야 합니다: {radius}")
        strategy = get('strategy')
        if strategy is not None and strategy not in STRATEGIES:
            found.append(f"알 수 없는 전략: {strategy}")
        schedule = get('schedule')
        if isinstance(schedule, str) and schedule not in SCHEDULE_PRESETS:
            found.append(f"알 수 없는 스케줄 프리셋: {schedule}")
        for name in ('texture_width', 'texture_height', 'texture_size', 'view_resolution'):
            size = get(name)
            if size is not None and size < 1:
                found.append(f"{name} 은 1 이상이어야 합니다: {size}")

        # 학습 설정
        batch = get('batch_size')
        if batch is not None and batch < 1:
            found.append(f"batch_size 는 1 이상이어야 합니다: {batch}")
        epochs = get('epochs')
        if epochs is not None and epochs < 1:
            found.append(f"epochs 는 1 이상이어야 합니다: {epochs}")
        lr = get('learning_rate')
        if lr is not None and lr < 0:
            found.append(f"learning_rate 는 0 이상이어야 합니다: {lr}")
        rng = get('augment_range')
        if rng is not None:
            lo, hi = rng
            if not (0.0 <= lo <= hi <= 1.0):
                found.append(f"augment_range 는 0 <= lo <= hi <= 1 이어야 합니다: {rng}")
        for name in ('augment_fraction', 'seeded_fraction'):
            frac = get(name)
            if frac is not None and not self.in_range(frac, 0.0, 1.0):
                found.append(f"{name} 은 [0, 1] 범위여야 합니다: {frac}")
        for name in ('texels_per_item', 'texels_per_scene', 'scene_count'):
            value = get(name)
            if value is not None and value < 1:
                found.append(f"{name} 은 1 이상이어야 합니다: {value}")
        for kind in get('scene_kinds') or []:
            if kind not in SCENE_KINDS:
                found.append(f"알 수 없는 장면 종류: {kind}")
        for pattern in get('patterns') or []:
            if pattern not in PATTERNS:
                found.append(f"알 수 없는 패턴: {pattern}")

        if self.check_files:
            found.extend(ReferencedFilesValidator().problems(cfg))
        return found

    def warnings(self, cfg: Any) -> List[str]:
        notes = []
        for name in ('texture_width', 'texture_height', 'texture_size'):
            size = getattr(cfg, name, None)
            if size is not None and not self.is_power_of_two(size):
                notes.append(f"{name}={size} 은 2의 거듭제곱이 아닙니다 (권장)")
        return notes


class ReferencedFilesValidator(BaseValidator):
    """설정이 가리키는 입력 파일 (메쉬, 카메라 JSON, 가중치) 존재 여부"""

    error_class = DataError
    FIELDS = ('mesh', 'camera_file', 'weights')

    def problems(self, cfg: Any) -> List[str]:
        found = []
        for name in self.FIELDS:
            path = getattr(cfg, name, None)
            if path and not Path(path).exists():
                found.append(f"{name} 파일이 없습니다: {path}")
        return found
