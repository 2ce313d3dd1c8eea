"""
역투영 전략 정량 평가

- L1 텍스처 오차, 시점별 PSNR, 커버리지
- 이음선(seam) 에너지: 3D 에서는 붙어 있지만 UV 에서는 떨어진 텍셀 쌍의 색 차이
- 절제(ablation) 실행: K 크기, 지오데식 사용 여부
"""
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from core.backproject import (
    backproject_average, backproject_frontfacing, backproject_neural, backproject_weighted,
    sample_center_colors,
)
from core.gather import gather_neighborhoods
from core.inpaint import inpaint_pullpush, texel_charts
from core.texture import Texture, pad_texture
from geometry.mesh import Mesh, TexelMap, chart_labels, edge_face_table
from geometry.raster import Camera, make_eval_views, render_gbuffer, render_textured
from neural.network import NetWeights
from utils.constants import (
    ABLATION_K_VALUES, BASELINE_STRATEGIES, DEFAULT_K, DEFAULT_THRESHOLD, DEFAULT_WEIGHT_POWER,
)
from utils.errors import DimensionMismatchError, InpaintError, UsageError
from utils.logger import logger

# PSNR 상한 (완전히 같은 이미지)
PSNR_CAP = 100.0
_UV_TOLERANCE = 1e-9


# ============================================================
# 기본 지표
# ============================================================

def l1_texture_error(pred: Texture, target: Texture, mask_mode: str = 'covered') -> float:
    """평균 채널 절대 오차

    mask_mode:
        covered - pred 에서 채워진 유효 텍셀
        all     - 모든 유효 텍셀 (빈 텍셀은 검정으로 비교)
    선택된 텍셀이 없으면 NaN
    """
    pred.check_same_shape(target)
    if mask_mode == 'covered':
        sel = pred.filled & target.valid
    elif mask_mode == 'all':
        sel = target.valid
    else:
        raise UsageError(f"알 수 없는 mask_mode: {mask_mode}")
    if not sel.any():
        return float('nan')
    return float(np.abs(pred.colors[sel] - target.colors[sel]).mean())


def coverage(texture: Texture) -> float:
    """채워진 유효 텍셀 비율"""
    total = int(texture.valid.sum())
    if total == 0:
        return 0.0
    return float((texture.filled & texture.valid).sum()) / total


def psnr(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    if not mask.any():
        return float('nan')
    mse = float(((a[mask] - b[mask]) ** 2).mean())
    if mse <= 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / mse))


def psnr_views(mesh: Mesh, pred: Texture, target: Texture,
               cameras: Optional[Sequence[Camera]] = None, workers: int = 1) -> List[float]:
    """시점별 PSNR (두 텍스처를 여백 확장 후 같은 G-버퍼로 렌더링, 전경 픽셀만)"""
    pred.check_same_shape(target)
    cameras = list(cameras) if cameras is not None else make_eval_views(width=128, height=128)
    pred_pad, target_pad = pad_texture(pred), pad_texture(target)
    values = []
    for camera in cameras:
        gbuf = render_gbuffer(mesh, camera, workers)
        a = render_textured(mesh, pred_pad, camera, gbuffer=gbuf)
        b = render_textured(mesh, target_pad, camera, gbuffer=gbuf)
        values.append(psnr(a.image, b.image, gbuf.mask))
    return values


# ============================================================
# 이음선 그래프
# ============================================================

@dataclass
class SeamGraph:
    """UV 절단 모서리를 사이에 둔 텍셀 쌍

    pairs 는 평탄 텍셀 번호 (row * W + col), 각 쌍은 (작은 번호, 큰 번호)
    """
    width: int
    height: int
    pairs: np.ndarray                     # [P, 2]
    weights: np.ndarray                   # [P] 표면 길이
    group: np.ndarray                     # [P] 차트 쌍 그룹 번호
    chart_pairs: List[Tuple[int, int]] = field(default_factory=list)
    cut_edges: int = 0

    @property
    def pair_count(self) -> int:
        return len(self.pairs)

    @property
    def group_count(self) -> int:
        return len(self.chart_pairs)

    def texels(self, k: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        a, b = self.pairs[k]
        return divmod(int(a), self.width), divmod(int(b), self.width)


def _cut_edges(mesh: Mesh):
    """UV 가 서로 다른 내부 모서리

    Returns:
        목록 [(face_a, face_b, 정점 (lo, hi), uv_a (lo, hi) [2,2], uv_b (lo, hi) [2,2])]
    """
    edges, edge_of_half = edge_face_table(mesh)
    counts = np.bincount(edge_of_half, minlength=len(edges))
    order = np.argsort(edge_of_half, kind='stable')
    starts = np.concatenate([[0], np.cumsum(counts)])
    uv = mesh.uv_coords
    cuts = []
    for e in np.nonzero(counts == 2)[0]:
        halves = order[starts[e]:starts[e + 1]]
        sides = []
        for h in halves:
            f, i = divmod(int(h), 3)
            v0, v1 = mesh.faces[f, i], mesh.faces[f, (i + 1) % 3]
            t0, t1 = mesh.face_uv_indices[f, i], mesh.face_uv_indices[f, (i + 1) % 3]
            if v0 > v1:
                v0, v1, t0, t1 = v1, v0, t1, t0
            sides.append((f, np.array([uv[t0], uv[t1]])))
        (fa, uva), (fb, uvb) = sides
        if np.abs(uva - uvb).max() <= _UV_TOLERANCE:
            continue
        cuts.append((fa, fb, tuple(edges[e]), uva, uvb))
    return cuts


def build_seam_graph(mesh: Mesh, texel_map: TexelMap) -> SeamGraph:
    """절단 모서리 양쪽의 경계 텍셀을 호 길이 대응으로 짝지음

    반 텍셀 간격으로 모서리를 샘플링하고, 각 샘플을 자기 면 안쪽으로 반 텍셀 민 뒤
    가장 가까운 유효 텍셀에 대응시킨다. UV 에서 인접한 쌍은 버린다.
    """
    w, h = texel_map.width, texel_map.height
    _, labels = chart_labels(mesh)
    cuts = _cut_edges(mesh)
    if not texel_map.valid.any() or not cuts:
        return SeamGraph(w, h, np.zeros((0, 2), dtype=np.int64), np.zeros(0),
                         np.zeros(0, dtype=np.int64), [], len(cuts))

    # 가장 가까운 유효 텍셀 색인
    _, (near_r, near_c) = ndimage.distance_transform_edt(~texel_map.valid, return_indices=True)
    scale = np.array([w, h], dtype=np.float64)
    face_uv_center = mesh.face_uv_corners().mean(axis=1)

    def texel_of(uv_pts: np.ndarray, face: int) -> np.ndarray:
        inward = face_uv_center[face] - uv_pts
        length = np.linalg.norm(inward * scale, axis=1, keepdims=True)
        pts = uv_pts + 0.5 * inward / np.maximum(length, 1e-12)
        col = np.clip(np.floor(pts[:, 0] * w).astype(np.int64), 0, w - 1)
        row = np.clip(np.floor(pts[:, 1] * h).astype(np.int64), 0, h - 1)
        r, c = near_r[row, col], near_c[row, col]
        return r * w + c

    pairs, weights, groups = [], [], []
    group_ids: Dict[Tuple[int, int], int] = {}
    for fa, fb, (v0, v1), uva, uvb in cuts:
        span = max(np.linalg.norm((uva[1] - uva[0]) * scale), np.linalg.norm((uvb[1] - uvb[0]) * scale))
        n = max(1, int(math.ceil(2.0 * span)))
        t = (np.arange(n) + 0.5) / n
        a = texel_of(uva[0] + t[:, None] * (uva[1] - uva[0]), fa)
        b = texel_of(uvb[0] + t[:, None] * (uvb[1] - uvb[0]), fb)
        length = float(np.linalg.norm(mesh.vertices[v1] - mesh.vertices[v0]))

        ar, ac = np.divmod(a, w)
        br, bc = np.divmod(b, w)
        keep = (np.abs(ar - br) > 1) | (np.abs(ac - bc) > 1)
        if not keep.any():
            continue
        key = tuple(sorted((int(labels[fa]), int(labels[fb]))))
        gid = group_ids.setdefault(key, len(group_ids))
        pair = np.sort(np.stack([a[keep], b[keep]], axis=1), axis=1)
        pairs.append(pair)
        weights.append(np.full(len(pair), length / n))
        groups.append(np.full(len(pair), gid))

    chart_pairs = sorted(group_ids, key=group_ids.get)
    if not pairs:
        return SeamGraph(w, h, np.zeros((0, 2), dtype=np.int64), np.zeros(0),
                         np.zeros(0, dtype=np.int64), [], len(cuts))
    graph = SeamGraph(w, h, np.concatenate(pairs).astype(np.int64), np.concatenate(weights),
                      np.concatenate(groups).astype(np.int64), chart_pairs, len(cuts))
    logger.debug(f"이음선 그래프: 절단 모서리 {len(cuts)}개, 쌍 {graph.pair_count}개, 그룹 {graph.group_count}개")
    return graph


@dataclass
class SeamStats:
    energy: float
    used_pairs: int
    skipped_pairs: int


def seam_energy_stats(texture: Texture, graph: SeamGraph) -> SeamStats:
    """길이 가중 평균 색 차이 - 빈 텍셀이 낀 쌍은 건너뛰고 센다"""
    if (texture.width, texture.height) != (graph.width, graph.height):
        raise DimensionMismatchError("텍스처와 이음선 그래프 크기가 다릅니다")
    if graph.pair_count == 0:
        return SeamStats(0.0, 0, 0)
    colors = texture.colors.reshape(-1, 3)
    filled = texture.filled.reshape(-1)
    a, b = graph.pairs[:, 0], graph.pairs[:, 1]
    ok = filled[a] & filled[b]
    skipped = int((~ok).sum())
    if skipped:
        logger.debug(f"빈 텍셀이 포함된 이음선 쌍 {skipped}개를 건너뜀")
    if not ok.any():
        return SeamStats(0.0, 0, skipped)
    diff = np.abs(colors[a[ok]] - colors[b[ok]]).mean(axis=1)
    w = graph.weights[ok]
    return SeamStats(float((w * diff).sum() / w.sum()), int(ok.sum()), skipped)


def seam_energy(texture: Texture, graph: SeamGraph) -> float:
    return seam_energy_stats(texture, graph).energy


# ============================================================
# 장면 평가 / 절제
# ============================================================

def metrics_row(scene: str, strategy: str, K: int, geodesics: bool, thr: float,
                raw: Texture, target: Texture, mesh: Mesh, graph: SeamGraph,
                charts: np.ndarray, texel_map: TexelMap, wall_time_ms: float,
                eval_cameras: Optional[Sequence[Camera]] = None) -> Dict:
    """CSV 한 행 - L1/커버리지는 원본, PSNR/이음선은 구멍을 채운 텍스처로 계산"""
    try:
        filled = inpaint_pullpush(raw, texel_map, charts=charts)
    except InpaintError:
        filled = raw
    return {
        'scene': scene,
        'strategy': strategy,
        'K': K,
        'geodesics': int(bool(geodesics)),
        'thr': thr,
        'L1': l1_texture_error(raw, target),
        'PSNR': float(np.nanmean(psnr_views(mesh, filled, target, eval_cameras))) if raw.filled.any() else float('nan'),
        'seam_energy': seam_energy(filled, graph),
        'coverage': coverage(raw),
        'wall_time_ms': wall_time_ms,
    }


def _timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, (time.perf_counter() - start) * 1000.0


def evaluate_scene(sample, weights: Optional[NetWeights] = None, thr: float = DEFAULT_THRESHOLD,
                   power: float = DEFAULT_WEIGHT_POWER, K: int = DEFAULT_K, use_geodesics: bool = True,
                   strategies: Optional[Sequence[str]] = None, workers: int = 1,
                   eval_cameras: Optional[Sequence[Camera]] = None,
                   textures_out: Optional[List[Tuple[str, str, Texture]]] = None) -> List[Dict]:
    """장면 하나에서 베이스라인 3종 (+ 가중치가 있으면 neural) 비교

    sample 은 core.synthetic.SceneSample (mesh, texel_map, target, views, geo, name)
    textures_out 을 주면 (장면, 전략, 원본 텍스처) 를 덧붙인다 (갤러리용)
    """
    strategies = list(strategies) if strategies else BASELINE_STRATEGIES + (['neural'] if weights is not None else [])
    _, charts = texel_charts(sample.mesh, sample.texel_map)
    graph = build_seam_graph(sample.mesh, sample.texel_map)
    samples, sample_ms = _timed(sample_center_colors, sample.texel_map, sample.views, thr)

    rows = []
    for strategy in strategies:
        if strategy == 'frontfacing':
            tex, ms = _timed(backproject_frontfacing, sample.texel_map, sample.views, thr, samples)
        elif strategy == 'average':
            tex, ms = _timed(backproject_average, sample.texel_map, sample.views, thr, samples)
        elif strategy == 'weighted':
            tex, ms = _timed(backproject_weighted, sample.texel_map, sample.views, thr, power, samples)
        elif strategy == 'neural':
            if weights is None:
                raise UsageError("neural 평가에는 가중치가 필요합니다")
            tex, ms = _timed(backproject_neural, sample.texel_map, sample.views, weights, K,
                             geo=sample.geo, use_geodesics=use_geodesics, workers=workers)
        else:
            raise UsageError(f"알 수 없는 전략: {strategy}")
        if strategy != 'neural':
            ms += sample_ms
        if textures_out is not None:
            textures_out.append((sample.name, strategy, tex))
        rows.append(metrics_row(sample.name, strategy, K, use_geodesics and strategy == 'neural', thr,
                                tex, sample.target, sample.mesh, graph, charts, sample.texel_map, ms,
                                eval_cameras))
    return rows


WeightsSource = Union[NetWeights, Callable[[int, bool], NetWeights]]


def _weights_for(source: WeightsSource, K: int, use_geodesics: bool) -> NetWeights:
    return source(K, use_geodesics) if callable(source) else source


def run_ablation(samples: Sequence, weights: WeightsSource, axis: str = 'K',
                 k_values: Sequence[int] = ABLATION_K_VALUES, K: int = DEFAULT_K,
                 thr: float = DEFAULT_THRESHOLD, workers: int = 1,
                 eval_cameras: Optional[Sequence[Camera]] = None) -> List[Dict]:
    """절제 실행 - 장면마다 axis='K' 이면 K 값 수만큼, 'geodesics' 이면 2행

    weights 가 callable 이면 설정별로 (K, use_geodesics) 를 받아 가중치를 돌려준다
    (설정마다 따로 학습하는 경우)
    """
    if axis == 'K':
        settings = [(int(k), True) for k in k_values]
    elif axis == 'geodesics':
        settings = [(K, True), (K, False)]
    else:
        raise UsageError(f"알 수 없는 절제 축: {axis} (K 또는 geodesics)")

    rows = []
    for sample in samples:
        _, charts = texel_charts(sample.mesh, sample.texel_map)
        graph = build_seam_graph(sample.mesh, sample.texel_map)
        for k, geo_on in settings:
            w = _weights_for(weights, k, geo_on)
            start = time.perf_counter()
            gathered = gather_neighborhoods(sample.texel_map, sample.views, sample.geo, k,
                                            use_geodesics=geo_on, workers=workers)
            tex = backproject_neural(sample.texel_map, sample.views, w, k, gathered=gathered,
                                     workers=workers)
            ms = (time.perf_counter() - start) * 1000.0
            rows.append(metrics_row(sample.name, 'neural', k, geo_on and sample.geo is not None, thr,
                                    tex, sample.target, sample.mesh, graph, charts,
                                    sample.texel_map, ms, eval_cameras))
            logger.info(f"절제 {sample.name}: K={k}, geodesics={geo_on}, L1={rows[-1]['L1']:.4f}")
    return rows


def median_by_strategy(rows: Sequence[Dict], column: str) -> Dict[str, float]:
    """전략별 장면 중앙값 (NaN 제외, 값이 없으면 NaN)"""
    grouped: Dict[str, List[float]] = {}
    for row in rows:
        grouped.setdefault(row['strategy'], []).append(float(row[column]))
    out = {}
    for strategy, values in grouped.items():
        finite = [v for v in values if not math.isnan(v)]
        out[strategy] = float(np.median(finite)) if finite else float('nan')
    return out
