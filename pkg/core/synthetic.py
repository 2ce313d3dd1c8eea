"""
학습용 합성 장면

- 기본 도형(구/토러스/큐브/캡슐) + 절차적 3D 패턴으로 칠한 정답 텍스처
- 6개 시점 렌더링 (G-버퍼 + 알베도 이미지)
- 뷰 불일치를 흉내내는 외형 교란 (색 지터 + 저주파 색 왜곡)

패턴은 표면점 s_u 의 함수이므로 UV 경계를 넘어도 연속이다
"""
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import ndimage

from core.gather import ViewBundle
from core.texture import Texture, pad_texture
from geometry.geodesics import GeodesicCache
from geometry.mesh import Mesh, TexelMap, build_texel_map, prepare_mesh
from geometry.primitives import make_primitive
from geometry.raster import Camera, make_view_ring, render_gbuffer, render_textured
from threads.scene_thread import ScenePreparationThread
from utils.constants import (
    AUGMENT_WARP_MAGNITUDE, DESK_TEXTURE_SIZE, DESK_VIEW_RESOLUTION, GEODESIC_RADIUS, HOLDOUT_SEED,
    PATTERNS, SCENE_KINDS,
)
from utils.errors import UsageError
from utils.logger import logger

PALETTE_RANGE = (0.15, 0.85)

# 장면 종류별 도형 인자 (학습 해상도에 맞춘 분할 수)
_KIND_ARGS: Dict[str, dict] = {
    'sphere': {'segments': 32, 'rings': 16},
    'torus': {'segments': 40, 'sides': 16},
    'cube': {'subdivisions': 4},
    'capsule': {'segments': 32, 'stacks': 24},
}


@dataclass
class SceneSample:
    """학습/평가 장면 하나"""
    name: str
    mesh: Mesh
    texel_map: TexelMap
    target: Texture
    views: List[ViewBundle]
    geo: Optional[GeodesicCache] = field(default=None, repr=False)
    kind: str = ''
    pattern: str = ''
    seed: int = 0

    @property
    def cameras(self) -> List[Camera]:
        return [v.camera for v in self.views]


def _seed_for(*parts) -> int:
    """문자열/정수 조합 → 결정적 시드"""
    return zlib.crc32('/'.join(str(p) for p in parts).encode('utf-8'))


# ============================================================
# 절차적 패턴
# ============================================================

def _palette(rng: np.random.Generator, n: int) -> np.ndarray:
    lo, hi = PALETTE_RANGE
    return rng.uniform(lo, hi, size=(n, 3))


def _direction(rng: np.random.Generator) -> np.ndarray:
    d = rng.normal(size=3)
    return d / np.linalg.norm(d)


def pattern_checker(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    colors = _palette(rng, 2)
    freq = rng.integers(3, 7)
    cell = np.floor((points + 1.0) * freq).astype(np.int64).sum(axis=1) % 2
    return colors[cell]


def pattern_stripes(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    colors = _palette(rng, 2)
    t = 0.5 + 0.5 * np.sin(points @ _direction(rng) * rng.uniform(10.0, 20.0))
    return colors[0] + t[:, None] * (colors[1] - colors[0])


def pattern_noise(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """격자 값 노이즈 (삼선형 보간)"""
    res = 8
    lattice = rng.uniform(*PALETTE_RANGE, size=(3, res, res, res))
    coords = np.clip((points + 0.6) / 1.2, 0.0, 1.0) * (res - 1)
    return np.stack([ndimage.map_coordinates(lattice[c], coords.T, order=1, mode='nearest')
                     for c in range(3)], axis=1)


def pattern_gradient(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    colors = _palette(rng, 2)
    t = np.clip(points @ _direction(rng) / np.sqrt(3.0) + 0.5, 0.0, 1.0)
    return colors[0] + t[:, None] * (colors[1] - colors[0])


PATTERN_FUNCS: Dict[str, Callable[[np.ndarray, np.random.Generator], np.ndarray]] = {
    'checker': pattern_checker,
    'stripes': pattern_stripes,
    'noise': pattern_noise,
    'gradient': pattern_gradient,
}


def paint_texture(texel_map: TexelMap, pattern: str, seed: int) -> Texture:
    """유효 텍셀 전체를 패턴 색으로 칠한 정답 텍스처"""
    if pattern not in PATTERN_FUNCS:
        raise UsageError(f"알 수 없는 패턴: {pattern} (가능: {', '.join(PATTERNS)})")
    rng = np.random.default_rng(_seed_for('pattern', pattern, seed))
    rows, cols = texel_map.valid_indices()
    colors = np.zeros((texel_map.height, texel_map.width, 3))
    colors[rows, cols] = PATTERN_FUNCS[pattern](texel_map.position[rows, cols], rng)
    return Texture.from_colors(colors, texel_map)


# ============================================================
# 장면 생성
# ============================================================

def render_views(mesh: Mesh, texture: Texture, cameras: Sequence[Camera],
                 workers: int = 1) -> List[ViewBundle]:
    """여백을 확장한 텍스처로 각 시점 렌더링"""
    padded = pad_texture(texture)
    views = []
    for camera in cameras:
        gbuf = render_gbuffer(mesh, camera, workers)
        result = render_textured(mesh, padded, camera, gbuffer=gbuf)
        views.append(ViewBundle(camera, result.image, gbuf))
    return views


def make_synthetic_scene(kind: str, pattern: str, resolution: int = DESK_TEXTURE_SIZE, seed: int = 0,
                         view_resolution: int = DESK_VIEW_RESOLUTION, view_count: int = 6,
                         geodesics: bool = True, radius: float = GEODESIC_RADIUS,
                         workers: int = 1) -> SceneSample:
    """절차적 장면 생성 (seed 에 대해 결정적)"""
    if kind not in SCENE_KINDS:
        raise UsageError(f"알 수 없는 장면 종류: {kind} (가능: {', '.join(SCENE_KINDS)})")
    if pattern not in PATTERNS:
        raise UsageError(f"알 수 없는 패턴: {pattern} (가능: {', '.join(PATTERNS)})")

    mesh = prepare_mesh(make_primitive(kind, **_KIND_ARGS[kind]))
    texel_map = build_texel_map(mesh, resolution, resolution)
    target = paint_texture(texel_map, pattern, seed)
    cameras = make_view_ring(view_count, width=view_resolution, height=view_resolution)
    views = render_views(mesh, target, cameras, workers)
    geo = GeodesicCache(mesh, radius=radius) if geodesics else None
    name = f'{kind}-{pattern}-{seed}'
    logger.info(f"합성 장면 생성: {name} (텍셀 {texel_map.valid_count}개, 뷰 {len(views)}개)")
    return SceneSample(name, mesh, texel_map, target, views, geo, kind, pattern, seed)


# ============================================================
# 외형 교란
# ============================================================

def _perturb_image(image: np.ndarray, mask: np.ndarray, strength: float,
                   rng: np.random.Generator) -> np.ndarray:
    """전경 픽셀에 색 지터 + 저주파 왜곡, 평균 편차 = AUGMENT_WARP_MAGNITUDE * strength"""
    h, w = mask.shape
    coarse = rng.normal(size=(4, 4, 3))
    warp = ndimage.zoom(coarse, (h / 4.0, w / 4.0, 1.0), order=3)[:h, :w]
    gain = 1.0 + rng.uniform(-0.1, 0.1, size=3)
    shift = rng.uniform(-0.05, 0.05, size=3)
    delta = warp + image * (gain - 1.0) + shift

    fg = mask.astype(bool)
    out = image.copy()
    if not fg.any():
        return out
    magnitude = np.abs(delta[fg]).mean()
    if magnitude > 0:
        delta *= AUGMENT_WARP_MAGNITUDE * strength / magnitude
    out[fg] = np.clip(image[fg] + delta[fg], 0.0, 1.0)
    return out


def augment_views(sample: SceneSample, strength: float, seed: int) -> SceneSample:
    """뷰 이미지만 교란한 장면 (기하/G-버퍼는 그대로)"""
    if not 0.0 <= strength <= 1.0:
        raise UsageError(f"교란 강도는 [0, 1] 범위여야 합니다: {strength}")
    if strength == 0.0:
        return replace(sample, views=[v.with_image(v.image.copy()) for v in sample.views])
    views = []
    for k, view in enumerate(sample.views):
        rng = np.random.default_rng(_seed_for('augment', sample.name, seed, k))
        views.append(view.with_image(_perturb_image(view.image, view.gbuffer.mask, strength, rng)))
    return replace(sample, views=views)


def mean_color_deviation(a: Sequence[ViewBundle], b: Sequence[ViewBundle]) -> float:
    """두 뷰 집합의 전경 픽셀 평균 색 편차"""
    total, count = 0.0, 0
    for va, vb in zip(a, b):
        fg = va.gbuffer.mask
        total += float(np.abs(va.image[fg] - vb.image[fg]).sum())
        count += int(fg.sum()) * 3
    return total / count if count else 0.0


def corpus_specs(kinds: Sequence[str], patterns: Sequence[str], count: int, seed: int,
                 pattern_shift: int = 0) -> List[tuple]:
    """(kind, pattern, seed) 명세 - 종류와 패턴을 순환, 시드는 seed 부터 1씩 증가"""
    if not kinds or not patterns:
        raise UsageError("장면 종류와 패턴은 하나 이상 필요합니다")
    return [(kinds[k % len(kinds)], patterns[(k + pattern_shift) % len(patterns)], seed + k)
            for k in range(count)]


def standard_corpus(count: int = 8, seed: int = 0) -> List[tuple]:
    """학습용 명세 - 구/토러스/큐브 + 패턴 순환"""
    return corpus_specs(['sphere', 'torus', 'cube'], PATTERNS, count, seed)


def holdout_corpus(count: int = 4, seed: int = HOLDOUT_SEED) -> List[tuple]:
    """평가용 명세 (학습 명세와 시드가 겹치지 않음)"""
    return corpus_specs(SCENE_KINDS, PATTERNS, count, seed, pattern_shift=1)


def make_scenes(specs: Sequence[tuple], resolution: int = DESK_TEXTURE_SIZE,
                view_resolution: int = DESK_VIEW_RESOLUTION, geodesics: bool = True,
                radius: float = GEODESIC_RADIUS, workers: int = 1,
                progress_callback: Optional[Callable[[int, int, str], None]] = None) -> List[SceneSample]:
    """명세 목록 → 장면 목록 (백그라운드 스레드에서 장면 단위 병렬, 순서 유지)"""

    def build(spec) -> SceneSample:
        kind, pattern, seed = spec
        return make_synthetic_scene(kind, pattern, resolution, seed, view_resolution,
                                    geodesics=geodesics, radius=radius)

    thread = ScenePreparationThread(specs, build, workers, progress_callback=progress_callback)
    thread.start()
    return thread.wait()
