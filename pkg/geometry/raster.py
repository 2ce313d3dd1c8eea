"""
핀홀 카메라 / 소프트웨어 래스터라이저

[규약]
- forward = normalize(look_at - position), right = normalize(forward x up),
  true_up = right x forward
- 깊이 = 카메라 공간 z (forward 방향 거리)
- 픽셀 (col, row) 중심 = (col + 0.5, row + 0.5), row는 아래로 증가
- 초점 거리 f = (height / 2) / tan(fov / 2), 두 축 공통
"""
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from geometry.mesh import Mesh, NO_FACE
from threads.worker_pool import WorkerPool
from utils.binfmt import BinaryReader, BinaryWriter
from utils.constants import (
    DEFAULT_CAMERA_DISTANCE, DEFAULT_FAR, DEFAULT_FOV, DEFAULT_NEAR, DEFAULT_UP,
    DEFAULT_VIEW_RESOLUTION, EVAL_ELEVATIONS, EVAL_VIEW_COUNT, GBUFFER_MAGIC,
    INVALID_TEXEL_COLOR, SIX_VIEW_PRESET,
)
from utils.errors import BehindCameraError, FormatError, UsageError
from utils.logger import logger


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class Camera:
    """핀홀 카메라"""
    position: Tuple[float, float, float]
    look_at: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    up: Tuple[float, float, float] = DEFAULT_UP
    vertical_fov: float = DEFAULT_FOV
    width: int = DEFAULT_VIEW_RESOLUTION
    height: int = DEFAULT_VIEW_RESOLUTION
    near: float = DEFAULT_NEAR
    far: float = DEFAULT_FAR

    def __post_init__(self):
        if not (0 < self.near < self.far):
            raise UsageError(f"near/far 가 잘못되었습니다: near={self.near}, far={self.far}")
        if self.width < 1 or self.height < 1:
            raise UsageError(f"카메라 해상도가 잘못되었습니다: {self.width}x{self.height}")
        if not (0 < self.vertical_fov < math.pi):
            raise UsageError(f"시야각이 잘못되었습니다: {self.vertical_fov}")
        forward = np.subtract(self.look_at, self.position)
        if np.linalg.norm(forward) < 1e-12:
            raise UsageError("카메라 위치와 주시점이 같습니다")
        if np.linalg.norm(np.cross(forward / np.linalg.norm(forward), self.up)) < 1e-9:
            raise UsageError("시선 방향이 up 벡터와 평행합니다")

    @property
    def focal(self) -> float:
        return (self.height / 2.0) / math.tan(self.vertical_fov / 2.0)

    def basis(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(right, true_up, forward)"""
        forward = _normalize(np.subtract(self.look_at, self.position).astype(np.float64))
        right = _normalize(np.cross(forward, np.asarray(self.up, dtype=np.float64)))
        true_up = np.cross(right, forward)
        return right, true_up, forward

    def to_camera_space(self, points: np.ndarray) -> np.ndarray:
        """월드 좌표 [N,3] → 카메라 좌표 (x 오른쪽, y 위, z 전방)"""
        right, true_up, forward = self.basis()
        d = np.asarray(points, dtype=np.float64) - np.asarray(self.position, dtype=np.float64)
        return np.stack([d @ right, d @ true_up, d @ forward], axis=-1)

    def ray_directions(self, cols: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """연속 픽셀 좌표를 지나는 단위 광선 방향 (월드)"""
        right, true_up, forward = self.basis()
        x = (np.asarray(cols) - self.width / 2.0) / self.focal
        y = (self.height / 2.0 - np.asarray(rows)) / self.focal
        d = x[..., None] * right + y[..., None] * true_up + forward
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def to_dict(self) -> Dict:
        return {
            'position': [float(v) for v in self.position],
            'look_at': [float(v) for v in self.look_at],
            'up': [float(v) for v in self.up],
            'vertical_fov_deg': math.degrees(self.vertical_fov),
            'width': self.width,
            'height': self.height,
            'near': self.near,
            'far': self.far,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'Camera':
        try:
            fov = math.radians(float(data.get('vertical_fov_deg', math.degrees(DEFAULT_FOV))))
            return cls(
                position=tuple(float(v) for v in data['position']),
                look_at=tuple(float(v) for v in data.get('look_at', (0.0, 0.0, 0.0))),
                up=tuple(float(v) for v in data.get('up', DEFAULT_UP)),
                vertical_fov=fov,
                width=int(data.get('width', DEFAULT_VIEW_RESOLUTION)),
                height=int(data.get('height', DEFAULT_VIEW_RESOLUTION)),
                near=float(data.get('near', DEFAULT_NEAR)),
                far=float(data.get('far', DEFAULT_FAR)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"카메라 정의가 잘못되었습니다: {e}")


@dataclass
class GBuffer:
    """픽셀별 기하 버퍼 (mask ⇔ depth 유한 ⇔ face_id >= 0)"""
    width: int
    height: int
    depth: np.ndarray        # [H, W], 배경은 +inf
    position: np.ndarray     # [H, W, 3]
    normal: np.ndarray       # [H, W, 3]
    face_id: np.ndarray      # [H, W] int64, 배경은 -1
    mask: np.ndarray         # [H, W] bool
    bary: np.ndarray = None  # [H, W, 3] 원근 보정 무게중심 좌표
    face_normal: np.ndarray = None  # [H, W, 3] 면 평면 법선 (보간하지 않음)

    @classmethod
    def empty(cls, width: int, height: int) -> 'GBuffer':
        return cls(
            width, height,
            np.full((height, width), np.inf),
            np.zeros((height, width, 3)),
            np.zeros((height, width, 3)),
            np.full((height, width), -1, dtype=np.int64),
            np.zeros((height, width), dtype=bool),
            np.zeros((height, width, 3)),
            np.zeros((height, width, 3)),
        )


@dataclass
class RenderResult:
    image: np.ndarray            # [H, W, 3]
    mask: np.ndarray             # [H, W] bool
    invalid_texel_hits: int = 0


# ============================================================
# 카메라 배치
# ============================================================

def camera_on_sphere(azimuth: float, elevation: float, distance: float = DEFAULT_CAMERA_DISTANCE,
                     **kwargs) -> Camera:
    """원점을 바라보는 구면 위 카메라 (방위각 0 = +z 정면)"""
    position = (
        distance * math.sin(azimuth) * math.cos(elevation),
        distance * math.sin(elevation),
        distance * math.cos(azimuth) * math.cos(elevation),
    )
    return Camera(position=position, look_at=(0.0, 0.0, 0.0), **kwargs)


def make_view_ring(count: int = 6, elevation_pattern: Optional[Sequence[float]] = None,
                   distance: float = DEFAULT_CAMERA_DISTANCE, **kwargs) -> List[Camera]:
    """원점을 둘러싼 카메라 배치

    count=6 이고 elevation_pattern 이 없으면 전/후/좌/우/상/하 프리셋,
    그 외에는 방위각 균등 분할 + 고도 패턴 순환
    """
    if count < 1:
        raise UsageError(f"시점 수는 1 이상이어야 합니다: {count}")
    if count == 6 and elevation_pattern is None:
        return [camera_on_sphere(az, el, distance, **kwargs) for az, el in SIX_VIEW_PRESET]

    pattern = list(elevation_pattern) if elevation_pattern else [0.0]
    return [
        camera_on_sphere(2.0 * math.pi * k / count, pattern[k % len(pattern)], distance, **kwargs)
        for k in range(count)
    ]


def make_eval_views(count: int = EVAL_VIEW_COUNT, distance: float = DEFAULT_CAMERA_DISTANCE,
                    **kwargs) -> List[Camera]:
    """평가용 고정 시점 (방위각 균등, 고도 +30°/-15° 교대)"""
    return make_view_ring(count, EVAL_ELEVATIONS, distance, **kwargs)


# ============================================================
# 투영
# ============================================================

def project_points(camera: Camera, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """벡터화 투영 - 예외 없이 깊이를 함께 반환

    Returns:
        (pixel [N, 2] (x=col, y=row 연속 좌표), depth [N])
    """
    cam = camera.to_camera_space(np.atleast_2d(points))
    z = cam[:, 2]
    with np.errstate(divide='ignore', invalid='ignore'):
        px = camera.width / 2.0 + camera.focal * cam[:, 0] / z
        py = camera.height / 2.0 - camera.focal * cam[:, 1] / z
    return np.stack([px, py], axis=1), z


def project(camera: Camera, point) -> Tuple[np.ndarray, float]:
    """점 하나 투영 (R_c) - near 평면 앞/뒤에 있으면 BehindCameraError"""
    pixel, depth = project_points(camera, np.asarray(point, dtype=np.float64)[None])
    if not depth[0] > camera.near:
        raise BehindCameraError(f"카메라 뒤의 점입니다 (depth={depth[0]:.4g})")
    return pixel[0], float(depth[0])


def pixel_of(pixel_xy: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """연속 좌표 → 정수 픽셀 (row, col) - 가장 가까운 픽셀 중심"""
    xy = np.floor(np.asarray(pixel_xy)).astype(np.int64)
    return xy[..., 1], xy[..., 0]


# ============================================================
# 래스터화
# ============================================================

def _raster_band(screen: np.ndarray, zc: np.ndarray, faces: np.ndarray, face_ids: np.ndarray,
                 width: int, row0: int, row1: int, far: float):
    """행 구간 [row0, row1) 래스터화 - z-버퍼, 면 번호, 원근 보정 무게중심"""
    rows_n = row1 - row0
    zbuf = np.full((rows_n, width), np.inf)
    fbuf = np.full((rows_n, width), -1, dtype=np.int64)
    bbuf = np.zeros((rows_n, width, 3))

    for f, tri in zip(face_ids, faces):
        pts = screen[tri]
        zs = zc[tri]
        lo = np.floor(pts.min(axis=0) - 0.5).astype(int)
        hi = np.ceil(pts.max(axis=0) - 0.5).astype(int)
        c0, c1 = max(lo[0], 0), min(hi[0], width - 1)
        r0, r1 = max(lo[1], row0), min(hi[1], row1 - 1)
        if c0 > c1 or r0 > r1:
            continue

        ax, ay = pts[0]
        bx, by = pts[1]
        cx, cy = pts[2]
        area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if abs(area2) < 1e-12:
            continue
        sign = 1.0 if area2 > 0 else -1.0

        cols, rows = np.meshgrid(np.arange(c0, c1 + 1), np.arange(r0, r1 + 1))
        px = cols.ravel() + 0.5
        py = rows.ravel() + 0.5

        inside = np.ones(px.shape, dtype=bool)
        edges = []
        for (x0, y0), (x1, y1) in (((ax, ay), (bx, by)), ((bx, by), (cx, cy)), ((cx, cy), (ax, ay))):
            e = sign * ((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0))
            du, dv = sign * (x1 - x0), sign * (y1 - y0)
            owned = dv > 0 or (dv == 0 and du < 0)
            inside &= (e > 0) | ((e == 0) & owned)
            edges.append(e)
        if not inside.any():
            continue

        lam = np.stack([edges[1], edges[2], edges[0]], axis=1)[inside] / abs(area2)
        lam = np.clip(lam, 0.0, None)
        persp = lam / zs
        inv_z = persp.sum(axis=1)
        depth = 1.0 / inv_z
        persp /= inv_z[:, None]

        rr = rows.ravel()[inside] - row0
        cc = cols.ravel()[inside]
        closer = (depth < zbuf[rr, cc]) & (depth <= far)
        if not closer.any():
            continue
        rr, cc = rr[closer], cc[closer]
        zbuf[rr, cc] = depth[closer]
        fbuf[rr, cc] = f
        bbuf[rr, cc] = persp[closer]

    return zbuf, fbuf, bbuf


def face_plane_normals(mesh: Mesh, face_ids: np.ndarray) -> np.ndarray:
    """면의 기하 법선 [N, 3] (퇴화 면은 0 벡터)"""
    corners = mesh.vertices[mesh.faces[face_ids]]
    n = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    length = np.linalg.norm(n, axis=1)
    return np.where(length[:, None] > 1e-12, n / np.maximum(length, 1e-12)[:, None], 0.0)


def render_gbuffer(mesh: Mesh, camera: Camera, workers: int = 1) -> GBuffer:
    """z-버퍼 래스터화로 G-버퍼 생성 (컬링 없음, near 평면을 넘는 면은 제외)"""
    gbuf = GBuffer.empty(camera.width, camera.height)
    if mesh.face_count == 0:
        return gbuf

    screen, zc = project_points(camera, mesh.vertices)
    keep = (zc[mesh.faces] > camera.near).all(axis=1)
    face_ids = np.nonzero(keep)[0]
    faces = mesh.faces[face_ids]
    if len(face_ids) == 0:
        return gbuf

    bands = max(1, min(workers, camera.height))
    edges = np.linspace(0, camera.height, bands + 1).astype(int)
    tasks = [(edges[k], edges[k + 1]) for k in range(bands) if edges[k] < edges[k + 1]]

    def run(band):
        return _raster_band(screen, zc, faces, face_ids, camera.width, band[0], band[1], camera.far)

    with WorkerPool(workers) as pool:
        results = pool.map(run, tasks)

    for (row0, row1), (zbuf, fbuf, bbuf) in zip(tasks, results):
        gbuf.depth[row0:row1] = zbuf
        gbuf.face_id[row0:row1] = fbuf
        gbuf.bary[row0:row1] = bbuf

    gbuf.mask = gbuf.face_id >= 0
    fg = gbuf.mask
    if fg.any():
        fids = gbuf.face_id[fg]
        w = gbuf.bary[fg]
        tri = mesh.faces[fids]
        gbuf.position[fg] = np.einsum('nk,nkd->nd', w, mesh.vertices[tri])
        gbuf.face_normal[fg] = face_plane_normals(mesh, fids)
        if mesh.vertex_normals is not None:
            n = np.einsum('nk,nkd->nd', w, mesh.vertex_normals[tri])
            length = np.linalg.norm(n, axis=1)
            length[length < 1e-12] = 1.0
            gbuf.normal[fg] = n / length[:, None]
        else:
            gbuf.normal[fg] = gbuf.face_normal[fg]
    logger.debug(f"G-버퍼: 전경 픽셀 {int(fg.sum())}개 / {camera.width * camera.height}")
    return gbuf


def pixel_uv(mesh: Mesh, gbuf: GBuffer) -> np.ndarray:
    """전경 픽셀의 UV 좌표 [N, 2] (mask 순서)"""
    fids = gbuf.face_id[gbuf.mask]
    return np.einsum('nk,nkd->nd', gbuf.bary[gbuf.mask], mesh.uv_coords[mesh.face_uv_indices[fids]])


def sample_texture(colors: np.ndarray, filled: np.ndarray, uv: np.ndarray,
                   bilinear: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """UV 위치의 텍스처 색 조회

    Returns:
        (color [N, 3], ok [N]) - ok 가 False 이면 비어 있는 텍셀
    """
    th, tw = filled.shape
    if not bilinear:
        i = np.clip(np.floor(uv[:, 0] * tw).astype(np.int64), 0, tw - 1)
        j = np.clip(np.floor(uv[:, 1] * th).astype(np.int64), 0, th - 1)
        return colors[j, i], filled[j, i]

    x = uv[:, 0] * tw - 0.5
    y = uv[:, 1] * th - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx, fy = x - x0, y - y0
    acc = np.zeros((len(uv), 3))
    wsum = np.zeros(len(uv))
    for dy, wy in ((0, 1 - fy), (1, fy)):
        for dx, wx in ((0, 1 - fx), (1, fx)):
            jj = np.clip(y0 + dy, 0, th - 1)
            ii = np.clip(x0 + dx, 0, tw - 1)
            w = wx * wy * filled[jj, ii]
            acc += w[:, None] * colors[jj, ii]
            wsum += w
    ok = wsum > 1e-12
    acc[ok] /= wsum[ok, None]
    return acc, ok


def render_textured(mesh: Mesh, texture, camera: Camera, bilinear: bool = False,
                    gbuffer: Optional[GBuffer] = None, workers: int = 1) -> RenderResult:
    """조명 없는 알베도 렌더링

    texture 는 colors [H,W,3] 와 filled [H,W] 속성을 가진 객체 (core.texture.Texture)
    비어 있는 텍셀에 닿은 픽셀은 마젠타로 칠하고 개수를 센다
    """
    gbuf = gbuffer if gbuffer is not None else render_gbuffer(mesh, camera, workers)
    image = np.zeros((camera.height, camera.width, 3))
    if not gbuf.mask.any():
        return RenderResult(image, gbuf.mask.copy(), 0)

    uv = pixel_uv(mesh, gbuf)
    color, ok = sample_texture(texture.colors, texture.filled, uv, bilinear)
    color[~ok] = INVALID_TEXEL_COLOR
    image[gbuf.mask] = color
    misses = int((~ok).sum())
    if misses:
        logger.debug(f"빈 텍셀 참조 픽셀 {misses}개")
    return RenderResult(image, gbuf.mask.copy(), misses)


# ============================================================
# G-버퍼 입출력
# ============================================================

_PIXEL_DTYPE = np.dtype([
    ('depth', '<f4'), ('pos', '<f4', (3,)), ('normal', '<f4', (3,)),
    ('face', '<u4'), ('mask', 'u1'),
])


def save_gbuffer(gbuf: GBuffer, path: Union[str, Path]):
    """STXG: magic, version, W, H, 픽셀별 {f32 depth, 3f32 pos, 3f32 normal, u32 face, u8 mask}"""
    records = np.zeros(gbuf.width * gbuf.height, dtype=_PIXEL_DTYPE)
    records['depth'] = gbuf.depth.ravel()
    records['pos'] = gbuf.position.reshape(-1, 3)
    records['normal'] = gbuf.normal.reshape(-1, 3)
    face = gbuf.face_id.ravel()
    records['face'] = np.where(face >= 0, face, NO_FACE)
    records['mask'] = gbuf.mask.ravel()

    writer = BinaryWriter(GBUFFER_MAGIC)
    writer.u32(gbuf.width)
    writer.u32(gbuf.height)
    writer.array(records, _PIXEL_DTYPE)
    writer.save(path)


def load_gbuffer(path: Union[str, Path], mesh: Optional[Mesh] = None) -> GBuffer:
    """STXG 읽기 - mesh 를 주면 위치로부터 무게중심 좌표를 복원"""
    reader = BinaryReader.open(path, GBUFFER_MAGIC)
    reader.expect_version()
    width = reader.u32('width')
    height = reader.u32('height')
    records = reader.records(_PIXEL_DTYPE, width * height, 'pixels')
    reader.finish()

    face = records['face'].astype(np.int64)
    face[face == NO_FACE] = -1
    gbuf = GBuffer(
        width, height,
        records['depth'].astype(np.float64).reshape(height, width),
        records['pos'].astype(np.float64).reshape(height, width, 3),
        records['normal'].astype(np.float64).reshape(height, width, 3),
        face.reshape(height, width),
        records['mask'].astype(bool).reshape(height, width),
        np.zeros((height, width, 3)),
    )
    if mesh is not None and gbuf.mask.any():
        if gbuf.face_id[gbuf.mask].max() >= mesh.face_count:
            raise FormatError(f"{reader.name}: 메쉬에 없는 면 번호가 있습니다")
        gbuf.bary[gbuf.mask] = barycentric_of(mesh, gbuf.face_id[gbuf.mask], gbuf.position[gbuf.mask])
        gbuf.face_normal = np.zeros((height, width, 3))
        gbuf.face_normal[gbuf.mask] = face_plane_normals(mesh, gbuf.face_id[gbuf.mask])
    return gbuf


def barycentric_of(mesh: Mesh, face_ids: np.ndarray, points: np.ndarray) -> np.ndarray:
    """면 평면 위 점의 무게중심 좌표 (음수는 0으로 자르고 재정규화)"""
    c = mesh.vertices[mesh.faces[face_ids]]
    v0 = c[:, 1] - c[:, 0]
    v1 = c[:, 2] - c[:, 0]
    v2 = points - c[:, 0]
    d00 = np.einsum('nd,nd->n', v0, v0)
    d01 = np.einsum('nd,nd->n', v0, v1)
    d11 = np.einsum('nd,nd->n', v1, v1)
    d20 = np.einsum('nd,nd->n', v2, v0)
    d21 = np.einsum('nd,nd->n', v2, v1)
    denom = d00 * d11 - d01 * d01
    denom[np.abs(denom) < 1e-30] = 1.0
    b1 = (d11 * d20 - d01 * d21) / denom
    b2 = (d00 * d21 - d01 * d20) / denom
    bary = np.clip(np.stack([1.0 - b1 - b2, b1, b2], axis=1), 0.0, None)
    total = bary.sum(axis=1, keepdims=True)
    total[total < 1e-30] = 1.0
    return bary / total


def depth_visualization(gbuf: GBuffer, camera: Camera) -> np.ndarray:
    """깊이 시각화 - [near, far] 를 [255, 0] 으로 선형 변환, 배경은 0"""
    depth = np.where(gbuf.mask, gbuf.depth, camera.far)
    scaled = 255.0 * (camera.far - depth) / (camera.far - camera.near)
    return np.clip(scaled, 0.0, 255.0)
