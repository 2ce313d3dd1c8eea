"""
픽셀 이웃 수집 (N(s_u))

유효 텍셀마다 모든 뷰에서 투영 위치 주변 K x K 창을 모은다
- 텍셀 중심점이 보이는 뷰에서만 수집
- 배경 픽셀(G-버퍼 mask=False)은 제외
- 레코드 순서: (텍셀, 뷰, 행, 열)
"""
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from geometry.geodesics import GeodesicCache
from geometry.mesh import TexelMap
from geometry.raster import Camera, GBuffer, pixel_of, project_points
from threads.worker_pool import WorkerPool
from utils.constants import DEFAULT_K, VISIBILITY_EPSILON
from utils.errors import DimensionMismatchError, UsageError
from utils.logger import logger

# 광선과 접평면이 거의 평행하면 픽셀 중심 깊이 사용
_GRAZING_COS = 0.05


@dataclass
class ViewBundle:
    """뷰 하나: 카메라 + RGB 이미지 + G-버퍼"""
    camera: Camera
    image: np.ndarray          # [H, W, 3] in [0, 1]
    gbuffer: GBuffer

    def __post_init__(self):
        shape = (self.camera.height, self.camera.width)
        if self.image.shape[:2] != shape or (self.gbuffer.height, self.gbuffer.width) != shape:
            raise DimensionMismatchError(
                f"뷰 크기 불일치: camera {shape}, image {self.image.shape[:2]}, "
                f"gbuffer {(self.gbuffer.height, self.gbuffer.width)}")

    def with_image(self, image: np.ndarray) -> 'ViewBundle':
        return replace(self, image=image)


@dataclass
class NeighborRecord:
    color: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    ndotv: float
    geodesic: float
    view_id: int
    pixel: Tuple[int, int]     # (row, col)


@dataclass
class NeighborSet:
    texel: Tuple[int, int]     # (row, col)
    records: List[NeighborRecord] = field(default_factory=list)
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))   # 텍셀 중심 s_u
    normal: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def is_empty(self) -> bool:
        return not self.records


@dataclass
class GatherResult:
    """전체 텍셀의 이웃 레코드 (CSR 압축)

    텍셀 t 의 레코드는 offsets[t]:offsets[t+1]
    """
    texel_rows: np.ndarray
    texel_cols: np.ndarray
    texel_position: np.ndarray     # [T, 3]
    texel_normal: np.ndarray       # [T, 3]
    offsets: np.ndarray            # [T + 1]
    color: np.ndarray              # [R, 3]
    position: np.ndarray           # [R, 3]
    normal: np.ndarray             # [R, 3]
    ndotv: np.ndarray              # [R]
    geodesic: np.ndarray           # [R]
    view_id: np.ndarray            # [R]
    pixel: np.ndarray              # [R, 2] (row, col)
    K: int = DEFAULT_K
    use_geodesics: bool = True

    @property
    def texel_count(self) -> int:
        return len(self.texel_rows)

    @property
    def record_count(self) -> int:
        return len(self.view_id)

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def nonempty(self) -> np.ndarray:
        return self.counts() > 0

    def neighbor_set(self, t: int) -> NeighborSet:
        """텍셀 t 의 NeighborSet"""
        lo, hi = self.offsets[t], self.offsets[t + 1]
        records = [
            NeighborRecord(self.color[k], self.position[k], self.normal[k], float(self.ndotv[k]),
                           float(self.geodesic[k]), int(self.view_id[k]),
                           (int(self.pixel[k, 0]), int(self.pixel[k, 1])))
            for k in range(lo, hi)
        ]
        return NeighborSet((int(self.texel_rows[t]), int(self.texel_cols[t])), records,
                           self.texel_position[t].copy(), self.texel_normal[t].copy())

    def neighbor_sets(self) -> List[NeighborSet]:
        return [self.neighbor_set(t) for t in range(self.texel_count)]

    def select(self, texels: np.ndarray) -> 'GatherResult':
        """텍셀 부분집합 (순서 유지)"""
        texels = np.asarray(texels, dtype=np.int64)
        counts = self.counts()[texels]
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        rec = (np.concatenate([np.arange(self.offsets[t], self.offsets[t + 1]) for t in texels])
               if len(texels) else np.zeros(0, dtype=np.int64)).astype(np.int64)
        return GatherResult(
            self.texel_rows[texels], self.texel_cols[texels],
            self.texel_position[texels], self.texel_normal[texels], offsets,
            self.color[rec], self.position[rec], self.normal[rec], self.ndotv[rec],
            self.geodesic[rec], self.view_id[rec], self.pixel[rec], self.K, self.use_geodesics)

    def with_colors(self, views: Sequence[ViewBundle]) -> 'GatherResult':
        """같은 기하, 다른 이미지(증강 등)에서 색만 다시 샘플링"""
        color = np.zeros_like(self.color)
        for v, view in enumerate(views):
            sel = self.view_id == v
            if sel.any():
                color[sel] = view.image[self.pixel[sel, 0], self.pixel[sel, 1]]
        return replace(self, color=color)


# ============================================================
# 가시성
# ============================================================

def _plane_depth(gbuffer: GBuffer, rows: np.ndarray, cols: np.ndarray, origin: np.ndarray,
                 ray: np.ndarray, forward: np.ndarray) -> np.ndarray:
    """광선이 픽셀 (rows, cols) 면 평면과 만나는 깊이 (배경 픽셀은 +inf)"""
    plane_n = gbuffer.face_normal if gbuffer.face_normal is not None else gbuffer.normal
    surf_p = gbuffer.position[rows, cols]
    surf_n = plane_n[rows, cols]
    denom = np.einsum('nd,nd->n', surf_n, ray)
    grazing = np.abs(denom) < _GRAZING_COS
    safe = np.where(grazing, 1.0, denom)
    t = np.einsum('nd,nd->n', surf_n, surf_p - origin) / safe
    depth = np.where(grazing, gbuffer.depth[rows, cols], t * (ray @ forward))
    return np.where(gbuffer.mask[rows, cols], depth, np.inf)


def visible_mask(gbuffer: GBuffer, camera: Camera, points: np.ndarray,
                 epsilon: float = VISIBILITY_EPSILON):
    """여러 점의 가시성 판정

    점을 지나는 광선을 투영 픽셀과 그 3x3 이웃 픽셀이 보여주는 면의 평면과 교차시킨다.
    그 깊이 중 점의 깊이와 가장 가까운 것이 epsilon 이내이고 중심 픽셀이 전경이면 보임.
    이웃 픽셀은 면 경계 바로 건너편의 점을 위한 것이다.

    Returns:
        (visible [N], rows [N], cols [N])
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    pixel, depth = project_points(camera, points)
    n = len(points)
    visible = np.zeros(n, dtype=bool)
    rows = np.zeros(n, dtype=np.int64)
    cols = np.zeros(n, dtype=np.int64)

    ok = np.isfinite(pixel).all(axis=1) & (depth > camera.near)
    r, c = pixel_of(np.where(ok[:, None], pixel, 0.0))
    ok &= (r >= 0) & (r < gbuffer.height) & (c >= 0) & (c < gbuffer.width)
    rows[ok], cols[ok] = r[ok], c[ok]
    ok[ok] = gbuffer.mask[rows[ok], cols[ok]]
    if not ok.any():
        return visible, rows, cols

    idx = np.nonzero(ok)[0]
    origin = np.asarray(camera.position, dtype=np.float64)
    ray = points[idx] - origin
    ray /= np.linalg.norm(ray, axis=1)[:, None]
    forward = camera.basis()[2]

    best = np.full(len(idx), np.inf)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            rr = np.clip(rows[idx] + dr, 0, gbuffer.height - 1)
            cc = np.clip(cols[idx] + dc, 0, gbuffer.width - 1)
            gap = np.abs(depth[idx] - _plane_depth(gbuffer, rr, cc, origin, ray, forward))
            best = np.minimum(best, gap)
    visible[idx] = best <= epsilon
    return visible, rows, cols


def visibility_test(gbuffer: GBuffer, camera: Camera, point, epsilon: float = VISIBILITY_EPSILON) -> bool:
    """점 하나의 가시성 (이미지 밖이면 False)"""
    visible, _, _ = visible_mask(gbuffer, camera, np.asarray(point, dtype=np.float64)[None], epsilon)
    return bool(visible[0])


# ============================================================
# 수집
# ============================================================

def _window_records(texel_pos: np.ndarray, views: Sequence[ViewBundle], K: int, epsilon: float):
    """(텍셀, 뷰, 행, 열) 레코드 목록 - 정렬 전"""
    half = K // 2
    parts = []
    for v, view in enumerate(views):
        visible, rows, cols = visible_mask(view.gbuffer, view.camera, texel_pos, epsilon)
        t_idx = np.nonzero(visible)[0]
        if len(t_idx) == 0:
            continue
        for dr in range(-half, half + 1):
            for dc in range(-half, half + 1):
                rr = rows[t_idx] + dr
                cc = cols[t_idx] + dc
                inside = (rr >= 0) & (rr < view.gbuffer.height) & (cc >= 0) & (cc < view.gbuffer.width)
                tt, rr, cc = t_idx[inside], rr[inside], cc[inside]
                fg = view.gbuffer.mask[rr, cc]
                parts.append(np.stack([tt[fg], np.full(fg.sum(), v), rr[fg], cc[fg]], axis=1))
    if not parts:
        return np.zeros((0, 4), dtype=np.int64)
    rec = np.concatenate(parts).astype(np.int64)
    order = np.lexsort((rec[:, 3], rec[:, 2], rec[:, 1], rec[:, 0]))
    return rec[order]


def gather_neighborhoods(texel_map: TexelMap, views: Sequence[ViewBundle],
                         geo: Optional[GeodesicCache] = None, K: int = DEFAULT_K,
                         epsilon: float = VISIBILITY_EPSILON, use_geodesics: bool = True,
                         workers: int = 1) -> GatherResult:
    """유효 텍셀 전체의 K x K 이웃 수집

    geo 가 없거나 use_geodesics=False 이면 δ = 0
    반경 밖 레코드의 δ 는 반경으로 포화
    """
    if K < 1 or K % 2 == 0:
        raise UsageError(f"K 는 1 이상의 홀수여야 합니다: {K}")

    rows, cols = texel_map.valid_indices()
    texel_pos = texel_map.position[rows, cols]
    texel_nrm = texel_map.normal[rows, cols]
    rec = _window_records(texel_pos, views, K, epsilon)

    n_tex = len(rows)
    counts = np.bincount(rec[:, 0], minlength=n_tex) if len(rec) else np.zeros(n_tex, dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    n_rec = len(rec)
    color = np.zeros((n_rec, 3))
    position = np.zeros((n_rec, 3))
    normal = np.zeros((n_rec, 3))
    ndotv = np.zeros(n_rec)
    face = np.zeros(n_rec, dtype=np.int64)
    bary = np.zeros((n_rec, 3))
    for v, view in enumerate(views):
        sel = rec[:, 1] == v
        if not sel.any():
            continue
        rr, cc = rec[sel, 2], rec[sel, 3]
        gb = view.gbuffer
        color[sel] = view.image[rr, cc]
        position[sel] = gb.position[rr, cc]
        normal[sel] = gb.normal[rr, cc]
        face[sel] = gb.face_id[rr, cc]
        bary[sel] = gb.bary[rr, cc]
        to_cam = np.asarray(view.camera.position) - gb.position[rr, cc]
        to_cam /= np.linalg.norm(to_cam, axis=1, keepdims=True)
        ndotv[sel] = np.clip(np.einsum('nd,nd->n', gb.normal[rr, cc], to_cam), -1.0, 1.0)

    geodesic = np.zeros(n_rec)
    if use_geodesics and geo is not None and n_rec:
        texel_face = texel_map.face_id[rows, cols]
        texel_bary = texel_map.bary[rows, cols]
        with_records = np.nonzero(counts)[0]
        order = with_records[np.argsort(texel_face[with_records], kind='stable')]
        splits = np.nonzero(np.diff(texel_face[order]))[0] + 1
        groups = np.split(order, splits) if len(order) else []

        def run(group):
            for t in group:
                lo, hi = offsets[t], offsets[t + 1]
                fld = geo.field(texel_face[t], texel_bary[t])
                if fld is None:
                    geodesic[lo:hi] = geo.radius
                    continue
                d = fld.distances_to(face[lo:hi], bary[lo:hi])
                geodesic[lo:hi] = np.minimum(np.nan_to_num(d, nan=geo.radius), geo.radius)

        with WorkerPool(workers) as pool:
            pool.map(run, groups)

    logger.info(f"이웃 수집: 텍셀 {n_tex}개, 레코드 {n_rec}개, 빈 텍셀 {int((counts == 0).sum())}개 (K={K})")
    return GatherResult(rows, cols, texel_pos, texel_nrm, offsets, color, position, normal,
                        ndotv, geodesic, rec[:, 1].copy(), rec[:, 2:4].copy(), K,
                        bool(use_geodesics and geo is not None))
