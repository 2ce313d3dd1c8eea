"""
역투영 - 뷰 이미지의 색을 텍스처 아틀라스로 옮김

[전략]
- frontfacing : n·v 가 가장 큰 뷰의 픽셀 색 (동률이면 작은 뷰 번호)
- average     : 조건을 만족하는 모든 뷰의 평균
- weighted    : (n·v)^power 가중 평균
- neural      : 픽셀 이웃 + 교차 어텐션 네트워크

베이스라인 세 가지는 투영 위치의 중심 픽셀 하나만 사용한다
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from core.gather import GatherResult, ViewBundle, gather_neighborhoods, visible_mask
from core.texture import Texture
from geometry.geodesics import GeodesicCache
from geometry.mesh import Mesh, TexelMap
from neural.network import NetWeights, predict_gather
from threads.worker_pool import WorkerPool
from utils.constants import (
    DEFAULT_K, DEFAULT_THRESHOLD, DEFAULT_WEIGHT_POWER, SCHEDULE_PRESETS, STRATEGIES,
    VISIBILITY_EPSILON,
)
from utils.errors import ScheduleError, UsageError
from utils.logger import logger


@dataclass
class CenterSamples:
    """뷰 x 유효 텍셀 중심 픽셀 샘플"""
    rows: np.ndarray          # 텍셀 행 [T]
    cols: np.ndarray          # 텍셀 열 [T]
    color: np.ndarray         # [V, T, 3]
    ndotv: np.ndarray         # [V, T]
    ok: np.ndarray            # [V, T] 보이고 n·v > thr


def _check_threshold(thr: float):
    if not -1.0 <= thr < 1.0:
        raise UsageError(f"임계값은 [-1, 1) 범위여야 합니다: {thr}")


def sample_center_colors(texel_map: TexelMap, views: Sequence[ViewBundle],
                         thr: float = DEFAULT_THRESHOLD,
                         epsilon: float = VISIBILITY_EPSILON) -> CenterSamples:
    """유효 텍셀마다 각 뷰의 중심 픽셀 색과 n_u·v_c"""
    _check_threshold(thr)
    rows, cols = texel_map.valid_indices()
    points = texel_map.position[rows, cols]
    normals = texel_map.normal[rows, cols]
    n_views, n_tex = len(views), len(rows)
    color = np.zeros((n_views, n_tex, 3))
    ndotv = np.zeros((n_views, n_tex))
    ok = np.zeros((n_views, n_tex), dtype=bool)
    for v, view in enumerate(views):
        visible, pr, pc = visible_mask(view.gbuffer, view.camera, points, epsilon)
        to_cam = np.asarray(view.camera.position, dtype=np.float64) - points
        to_cam /= np.maximum(np.linalg.norm(to_cam, axis=1, keepdims=True), 1e-12)
        ndotv[v] = np.einsum('nd,nd->n', normals, to_cam)
        ok[v] = visible & (ndotv[v] > thr)
        color[v, ok[v]] = view.image[pr[ok[v]], pc[ok[v]]]
    return CenterSamples(rows, cols, color, ndotv, ok)


def _to_texture(texel_map: TexelMap, samples: CenterSamples, colors: np.ndarray,
                filled: np.ndarray) -> Texture:
    tex = Texture.empty(texel_map)
    tex.colors[samples.rows[filled], samples.cols[filled]] = np.clip(colors[filled], 0.0, 1.0)
    tex.filled[samples.rows[filled], samples.cols[filled]] = True
    return tex


def backproject_frontfacing(texel_map: TexelMap, views: Sequence[ViewBundle],
                            thr: float = DEFAULT_THRESHOLD,
                            samples: Optional[CenterSamples] = None) -> Texture:
    """가장 정면인 뷰의 색 복사"""
    samples = samples or sample_center_colors(texel_map, views, thr)
    n_tex = len(samples.rows)
    if not len(views):
        return Texture.empty(texel_map)
    score = np.where(samples.ok, samples.ndotv, -np.inf)
    best = np.argmax(score, axis=0)
    filled = samples.ok.any(axis=0)
    colors = samples.color[best, np.arange(n_tex)]
    return _to_texture(texel_map, samples, colors, filled)


def backproject_average(texel_map: TexelMap, views: Sequence[ViewBundle],
                        thr: float = DEFAULT_THRESHOLD,
                        samples: Optional[CenterSamples] = None) -> Texture:
    """조건을 만족하는 뷰 색의 단순 평균"""
    return backproject_weighted(texel_map, views, thr, 0.0, samples)


def backproject_weighted(texel_map: TexelMap, views: Sequence[ViewBundle],
                         thr: float = DEFAULT_THRESHOLD, power: float = DEFAULT_WEIGHT_POWER,
                         samples: Optional[CenterSamples] = None) -> Texture:
    """(n·v)^power 가중 평균

    가중치는 텍셀별 최대 n·v 로 나눈 뒤 거듭제곱하므로 power 가 커도 0 으로 사라지지 않는다
    """
    if power < 0:
        raise UsageError(f"power 는 0 이상이어야 합니다: {power}")
    samples = samples or sample_center_colors(texel_map, views, thr)
    if not len(views):
        return Texture.empty(texel_map)

    ok = samples.ok
    pos = np.where(ok, np.maximum(samples.ndotv, 0.0), 0.0)
    top = pos.max(axis=0)
    rel = np.divide(pos, top, out=np.zeros_like(pos), where=top > 0)
    weights = np.where(ok, rel ** power, 0.0)
    # n·v 가 모두 0 이하인 텍셀은 균등 가중
    flat = ok.any(axis=0) & (weights.sum(axis=0) <= 0)
    weights[:, flat] = ok[:, flat].astype(np.float64)

    total = weights.sum(axis=0)
    filled = total > 0
    colors = np.einsum('vt,vtc->tc', weights, samples.color)
    colors[filled] /= total[filled, None]
    return _to_texture(texel_map, samples, colors, filled)


def backproject_neural(texel_map: TexelMap, views: Sequence[ViewBundle], weights: NetWeights,
                       K: int = DEFAULT_K, current: Optional[Texture] = None,
                       geo: Optional[GeodesicCache] = None, use_geodesics: bool = True,
                       gathered: Optional[GatherResult] = None, workers: int = 1,
                       dtype=np.float64, batch_size: int = 256) -> Texture:
    """신경망 역투영

    이웃이 비어 있는 텍셀은 비워 둔다 (구멍 채우기 대상)
    current 의 채워진 텍셀 색은 f_u 의 초기값으로 쓰인다
    """
    if K < 1 or K % 2 == 0:
        raise UsageError(f"K 는 1 이상의 홀수여야 합니다: {K}")
    tex = Texture.empty(texel_map)
    if not len(views):
        return tex
    if gathered is None:
        gathered = gather_neighborhoods(texel_map, views, geo, K, use_geodesics=use_geodesics,
                                        workers=workers)

    texels = np.nonzero(gathered.nonempty())[0]
    if len(texels) == 0:
        logger.warning("이웃이 있는 텍셀이 없습니다")
        return tex
    rows, cols = gathered.texel_rows[texels], gathered.texel_cols[texels]
    seed = np.zeros((len(texels), 3))
    if current is not None:
        current.check_same_shape(tex)
        has = current.filled[rows, cols]
        seed[has] = current.colors[rows[has], cols[has]]

    chunks = [np.arange(lo, min(lo + batch_size, len(texels))) for lo in range(0, len(texels), batch_size)]

    def run(chunk):
        return predict_gather(weights, gathered, texels[chunk], seed[chunk], batch_size, dtype)

    with WorkerPool(workers) as pool:
        parts = pool.map(run, chunks)
    pred = np.concatenate(parts) if parts else np.zeros((0, 3))

    tex.colors[rows, cols] = np.clip(pred, 0.0, 1.0)
    tex.filled[rows, cols] = True
    logger.info(f"신경망 역투영: 텍셀 {len(texels)}개 / 유효 {gathered.texel_count}개")
    return tex


def backproject(strategy: str, texel_map: TexelMap, views: Sequence[ViewBundle],
                thr: float = DEFAULT_THRESHOLD, power: float = DEFAULT_WEIGHT_POWER,
                weights: Optional[NetWeights] = None, K: int = DEFAULT_K,
                current: Optional[Texture] = None, geo: Optional[GeodesicCache] = None,
                use_geodesics: bool = True, workers: int = 1) -> Texture:
    """전략 이름으로 역투영 실행"""
    if strategy not in STRATEGIES:
        raise UsageError(f"알 수 없는 전략: {strategy} (가능: {', '.join(STRATEGIES)})")
    if strategy == 'frontfacing':
        return backproject_frontfacing(texel_map, views, thr)
    if strategy == 'average':
        return backproject_average(texel_map, views, thr)
    if strategy == 'weighted':
        return backproject_weighted(texel_map, views, thr, power)
    if weights is None:
        raise UsageError("neural 전략에는 가중치가 필요합니다")
    return backproject_neural(texel_map, views, weights, K, current, geo, use_geodesics,
                              workers=workers)


# ============================================================
# 반복 텍스처링
# ============================================================

def resolve_schedule(schedule: Union[str, Sequence[Sequence[int]]], view_count: int) -> List[List[int]]:
    """프리셋 이름 또는 뷰 그룹 목록 → 검증된 그룹 목록"""
    if isinstance(schedule, str):
        if schedule not in SCHEDULE_PRESETS:
            raise ScheduleError(f"알 수 없는 스케줄 프리셋: {schedule}")
        groups = SCHEDULE_PRESETS[schedule]
    else:
        groups = schedule
    resolved = []
    for group in groups:
        ids = [int(v) for v in group]
        bad = [v for v in ids if not 0 <= v < view_count]
        if bad:
            raise ScheduleError(f"스케줄이 없는 뷰를 참조합니다: {bad} (뷰 {view_count}개)")
        resolved.append(ids)
    return resolved


def run_iterative(texel_map: TexelMap, mesh: Mesh, views: Sequence[ViewBundle],
                  schedule: Union[str, Sequence[Sequence[int]]] = 'paint3d',
                  strategy: str = 'frontfacing', weights: Optional[NetWeights] = None,
                  thr: float = DEFAULT_THRESHOLD, power: float = DEFAULT_WEIGHT_POWER,
                  K: int = DEFAULT_K, geo: Optional[GeodesicCache] = None,
                  use_geodesics: bool = True, workers: int = 1) -> Texture:
    """뷰 그룹을 순서대로 역투영하여 누적

    이번 패스에서 채워진 텍셀은 덮어쓰고, 채워지지 않은 텍셀은 이전 색을 유지한다
    """
    groups = resolve_schedule(schedule, len(views))
    running = Texture.empty(texel_map)
    if strategy == 'neural' and use_geodesics and geo is None:
        geo = GeodesicCache(mesh)

    for k, group in enumerate(groups, 1):
        group_views = [views[v] for v in group]
        current = running if strategy == 'neural' else None
        result = backproject(strategy, texel_map, group_views, thr, power, weights, K,
                             current, geo, use_geodesics, workers)
        running.colors[result.filled] = result.colors[result.filled]
        running.filled |= result.filled
        logger.info(f"반복 {k}/{len(groups)}: 뷰 {group}, 채워진 텍셀 {int(running.filled.sum())}개")
    return running
