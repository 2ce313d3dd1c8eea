"""
설정 관리

- PipelineConfig : CLI 파이프라인 (메쉬, 텍스처 크기, 시점, 전략 ...)
- TrainConfig    : 학습 (배치, 에폭, 학습률, 교란 ...)
- 카메라 JSON / 뷰 매니페스트 읽기·쓰기

설정 파일은 JSON 또는 TOML (확장자로 구분)
"""
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, TypeVar, Union

import numpy as np

from core.gather import ViewBundle
from geometry.mesh import Mesh
from geometry.raster import Camera, load_gbuffer, make_view_ring, render_gbuffer
from threads.worker_pool import parallel_map
from utils.constants import (
    ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, AUGMENT_FRACTION, AUGMENT_RANGE, DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS, DEFAULT_K, DEFAULT_LEARNING_RATE, DEFAULT_SEED, DEFAULT_TEXTURE_SIZE,
    DEFAULT_THRESHOLD, DEFAULT_VIEW_RESOLUTION, DEFAULT_WEIGHT_POWER, DESK_TEXTURE_SIZE,
    DESK_VIEW_RESOLUTION, GEODESIC_RADIUS, PATTERNS, SEEDED_FRACTION, TEXELS_PER_ITEM, TEXELS_PER_SCENE,
)
from utils.errors import DimensionMismatchError, FormatError, UsageError
from utils.image_io import load_rgb
from utils.logger import logger
from validators.config_validator import ConfigValidator

T = TypeVar('T')


def read_mapping(path: Union[str, Path]) -> Dict[str, Any]:
    """JSON / TOML 파일 → dict"""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"설정 파일이 없습니다: {path}")
    try:
        if path.suffix.lower() == '.toml':
            with open(path, 'rb') as f:
                return tomllib.load(f)
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise UsageError(f"설정 파일을 읽을 수 없습니다 ({path}): {e}")


def _from_mapping(cls: Type[T], data: Dict[str, Any]) -> T:
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise UsageError(f"알 수 없는 설정 키: {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as e:
        raise UsageError(f"설정 값이 잘못되었습니다: {e}")


@dataclass
class PipelineConfig:
    """파이프라인 설정"""
    mesh: Optional[str] = None
    texture_width: int = DEFAULT_TEXTURE_SIZE
    texture_height: int = DEFAULT_TEXTURE_SIZE
    views: str = 'six'                      # 'six' 프리셋 또는 'ring'
    view_count: int = 6
    camera_file: Optional[str] = None
    view_resolution: int = DEFAULT_VIEW_RESOLUTION
    strategy: str = 'frontfacing'
    K: int = DEFAULT_K
    thr: float = DEFAULT_THRESHOLD
    power: float = DEFAULT_WEIGHT_POWER
    geodesic_radius: float = GEODESIC_RADIUS
    use_geodesics: bool = True
    schedule: Optional[Union[str, List[List[int]]]] = None
    inpaint: bool = False
    weights: Optional[str] = None
    output_dir: str = 'output'
    seed: int = DEFAULT_SEED
    workers: int = 1

    def __post_init__(self):
        ConfigValidator().require(self, 'PipelineConfig')

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PipelineConfig':
        return _from_mapping(cls, data)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'PipelineConfig':
        return cls.from_dict(read_mapping(path))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def cameras(self) -> List[Camera]:
        """카메라 파일이 있으면 그대로, 없으면 프리셋 배치"""
        if self.camera_file:
            return load_cameras(self.camera_file)
        count = 6 if self.views == 'six' else self.view_count
        return make_view_ring(count, None if self.views == 'six' else [0.0],
                              width=self.view_resolution, height=self.view_resolution)


@dataclass
class TrainConfig:
    """학습 설정"""
    batch_size: int = DEFAULT_BATCH_SIZE
    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPSILON
    augment_range: Tuple[float, float] = AUGMENT_RANGE
    augment_fraction: float = AUGMENT_FRACTION
    seeded_fraction: float = SEEDED_FRACTION
    K: int = DEFAULT_K
    use_geodesics: bool = True
    geodesic_radius: float = GEODESIC_RADIUS
    seed: int = DEFAULT_SEED
    texels_per_item: int = TEXELS_PER_ITEM
    texels_per_scene: int = TEXELS_PER_SCENE
    scene_count: int = 8
    holdout_count: int = 4
    scene_kinds: List[str] = field(default_factory=lambda: ['sphere', 'torus', 'cube'])
    patterns: List[str] = field(default_factory=lambda: list(PATTERNS))
    texture_size: int = DESK_TEXTURE_SIZE
    view_resolution: int = DESK_VIEW_RESOLUTION
    share_qkv: bool = False
    output_dir: str = 'train_output'
    workers: int = 1

    def __post_init__(self):
        self.augment_range = tuple(float(v) for v in self.augment_range)
        ConfigValidator().require(self, 'TrainConfig')

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainConfig':
        return _from_mapping(cls, data)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'TrainConfig':
        return cls.from_dict(read_mapping(path))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['augment_range'] = list(self.augment_range)
        return data


# ============================================================
# 카메라 / 뷰 매니페스트
# ============================================================

def save_cameras(cameras: List[Camera], path: Union[str, Path]):
    """{"cameras": [...]} JSON 저장"""
    with open(path, 'w', encoding='utf-8') as f:
        json.dump({'cameras': [c.to_dict() for c in cameras]}, f, ensure_ascii=False, indent=2)


def load_cameras(path: Union[str, Path]) -> List[Camera]:
    data = read_mapping(path)
    if 'cameras' not in data or not isinstance(data['cameras'], list):
        raise FormatError(f"카메라 파일에 'cameras' 목록이 없습니다: {path}")
    return [Camera.from_dict(c) for c in data['cameras']]


def save_views_manifest(cameras: List[Camera], path: Union[str, Path],
                        image_pattern: str = 'view_{:02d}.png', gbuffer_pattern: Optional[str] = 'gbuffer_{:02d}.stxg'):
    """외부 이미지 생성기에 넘길 매니페스트 템플릿"""
    entries = []
    for k, camera in enumerate(cameras):
        entry = {'image': image_pattern.format(k), 'camera': camera.to_dict()}
        if gbuffer_pattern:
            entry['gbuffer'] = gbuffer_pattern.format(k)
        entries.append(entry)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump({'views': entries}, f, ensure_ascii=False, indent=2)


def load_views_manifest(path: Union[str, Path], mesh: Mesh, workers: int = 1) -> List[ViewBundle]:
    """매니페스트의 이미지를 읽고 G-버퍼를 (있으면 읽고 없으면 렌더링해) 묶음

    이미지 경로는 매니페스트 파일 기준 상대 경로
    """
    path = Path(path)
    data = read_mapping(path)
    entries = data.get('views')
    if not isinstance(entries, list):
        raise FormatError(f"매니페스트에 'views' 목록이 없습니다: {path}")

    def build(entry) -> ViewBundle:
        try:
            camera = Camera.from_dict(entry['camera'])
            image_path = path.parent / entry['image']
        except (KeyError, TypeError) as e:
            raise FormatError(f"매니페스트 항목이 잘못되었습니다: {e}")
        if not image_path.exists():
            raise FormatError(f"뷰 이미지가 없습니다: {image_path}")
        image, _ = load_rgb(image_path)
        if image.shape[:2] != (camera.height, camera.width):
            raise DimensionMismatchError(
                f"{image_path.name}: 이미지 {image.shape[1]}x{image.shape[0]} != 카메라 {camera.width}x{camera.height}")
        gbuf_name = entry.get('gbuffer')
        if gbuf_name and (path.parent / gbuf_name).exists():
            gbuf = load_gbuffer(path.parent / gbuf_name, mesh)
        else:
            gbuf = render_gbuffer(mesh, camera)
        return ViewBundle(camera, np.asarray(image, dtype=np.float64), gbuf)

    views = parallel_map(build, entries, workers)
    logger.info(f"뷰 매니페스트: {len(views)}개 뷰 읽음 ({path.name})")
    return views


def manifest_images_exist(path: Union[str, Path]) -> bool:
    path = Path(path)
    if not path.exists():
        return False
    data = read_mapping(path)
    return all((path.parent / e.get('image', '')).is_file() for e in data.get('views', []))
