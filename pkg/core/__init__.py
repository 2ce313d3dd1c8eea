"""
역투영 파이프라인 핵심 패키지
(텍스처, 이웃 수집, 역투영, 구멍 채우기, 합성 장면, 학습, 평가, 리포트)
"""
from .config import PipelineConfig, TrainConfig
from .texture import Texture
from .gather import ViewBundle, NeighborRecord, NeighborSet, GatherResult, gather_neighborhoods
from .backproject import backproject, run_iterative
from .inpaint import inpaint_pullpush
# trainer / evalkit / report 는 필요한 곳에서 직접 import

__all__ = [
    'PipelineConfig',
    'TrainConfig',
    'Texture',
    'ViewBundle',
    'NeighborRecord',
    'NeighborSet',
    'GatherResult',
    'gather_neighborhoods',
    'backproject',
    'run_iterative',
    'inpaint_pullpush',
]
