"""
차트 제한 pull-push 구멍 채우기

pull: 채워진 텍셀을 2x2 씩 가중 평균하여 1x1 까지 피라미드 생성
push: 거친 단계의 색을 가장 가까운 업샘플로 올려 빈 텍셀만 채움

차트마다 해당 차트의 텍셀만 시드로 사용하므로 다른 차트 색이 섞이지 않는다
"""
from typing import List, Optional, Tuple

import numpy as np

from core.texture import Texture
from geometry.mesh import Mesh, TexelMap, chart_labels
from utils.errors import InpaintError
from utils.logger import logger


def _pull(colors: np.ndarray, weight: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    """(가중 색 합, 가중치 합) 피라미드 - 0 단계가 원본"""
    levels = [(colors * weight[..., None], weight.astype(np.float64))]
    c, w = levels[0]
    while c.shape[0] > 1 or c.shape[1] > 1:
        h, wd = c.shape[:2]
        ph, pw = h % 2, wd % 2
        if ph or pw:
            c = np.pad(c, ((0, ph), (0, pw), (0, 0)))
            w = np.pad(w, ((0, ph), (0, pw)))
        c = c.reshape(c.shape[0] // 2, 2, c.shape[1] // 2, 2, 3).sum(axis=(1, 3))
        w = w.reshape(w.shape[0] // 2, 2, w.shape[1] // 2, 2).sum(axis=(1, 3))
        levels.append((c, w))
    return levels


def _push(levels: List[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """가장 거친 단계부터 내려오며 빈 칸을 채운 색 [H, W, 3]"""
    c, w = levels[-1]
    color = np.where(w[..., None] > 0, c / np.maximum(w, 1e-300)[..., None], 0.0)
    for c, w in reversed(levels[:-1]):
        h, wd = w.shape
        up = np.repeat(np.repeat(color, 2, axis=0), 2, axis=1)[:h, :wd]
        own = w > 0
        color = np.where(own[..., None], c / np.maximum(w, 1e-300)[..., None], up)
    return color


def pull_push(colors: np.ndarray, filled: np.ndarray) -> np.ndarray:
    """단일 영역 pull-push - 채워진 텍셀은 그대로, 나머지는 채움"""
    if not filled.any():
        raise InpaintError("채워진 텍셀이 하나도 없어 구멍을 채울 수 없습니다")
    return _push(_pull(colors, filled))


def texel_charts(mesh: Mesh, texel_map: TexelMap) -> Tuple[int, np.ndarray]:
    """텍셀별 차트 번호 [H, W] (무효 텍셀은 -1)"""
    count, labels = chart_labels(mesh)
    charts = np.full((texel_map.height, texel_map.width), -1, dtype=np.int64)
    charts[texel_map.valid] = labels[texel_map.face_id[texel_map.valid]]
    return count, charts


def inpaint_pullpush(texture: Texture, texel_map: TexelMap, mesh: Optional[Mesh] = None,
                     charts: Optional[np.ndarray] = None) -> Texture:
    """빈 유효 텍셀을 같은 차트 안에서 pull-push 로 채움

    Args:
        texture: 입력 텍스처
        texel_map: 텍셀 맵 (유효 영역)
        mesh: 차트 계산용 메쉬 (charts 를 주면 생략 가능)
        charts: 텍셀별 차트 번호 [H, W] (-1 = 무효)

    시드가 하나도 없는 차트는 전체 텍스처 피라미드로 채우고 경고한다
    """
    if not (texture.filled & texture.valid).any():
        raise InpaintError("완전히 빈 텍스처는 채울 수 없습니다")
    if charts is None:
        if mesh is None:
            raise InpaintError("차트 정보(mesh 또는 charts)가 필요합니다")
        _, charts = texel_charts(mesh, texel_map)

    out = texture.copy()
    holes = texel_map.valid & ~texture.filled
    if not holes.any():
        return out

    seeds = texture.filled & texel_map.valid
    global_fill = None
    orphan_charts = 0
    for chart in np.unique(charts[holes]):
        in_chart = charts == chart
        rows, cols = np.nonzero(in_chart)
        r0, r1, c0, c1 = rows.min(), rows.max() + 1, cols.min(), cols.max() + 1
        box_chart = in_chart[r0:r1, c0:c1]
        box_seed = seeds[r0:r1, c0:c1] & box_chart
        box_hole = holes[r0:r1, c0:c1] & box_chart
        if box_seed.any():
            filled = pull_push(texture.colors[r0:r1, c0:c1], box_seed)
            out.colors[r0:r1, c0:c1][box_hole] = filled[box_hole]
        else:
            if global_fill is None:
                global_fill = pull_push(texture.colors, seeds)
            out.colors[r0:r1, c0:c1][box_hole] = global_fill[r0:r1, c0:c1][box_hole]
            orphan_charts += 1

    out.filled = texture.filled | holes
    if orphan_charts:
        logger.warning(f"시드 텍셀이 없는 차트 {orphan_charts}개를 전체 텍스처 색으로 채웠습니다")
    logger.info(f"구멍 채우기: 빈 텍셀 {int(holes.sum())}개 채움")
    return out
