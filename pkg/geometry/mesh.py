"""
메쉬 / 텍셀 맵 핵심 모듈

[역할]
- UV 아틀라스가 있는 삼각형 메쉬 로드, 검증, 정규화
- 면적 가중 정점 법선 계산
- 역 UV 매핑: 텍셀마다 3D 표면점 s_u, 법선 n_u, 면 id, 무게중심 좌표 기록

[텍셀 좌표 규약]
- 텍셀 (j, i) 의 중심 UV = ((i + 0.5) / W, (j + 0.5) / H)
- 배열의 j행은 v 증가 방향 (PNG 저장 시에만 상하 반전)
"""
import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from geometry.obj_io import read_obj, write_obj
from utils.binfmt import BinaryReader, BinaryWriter
from utils.constants import DEGENERATE_AREA, TEXEL_MAP_MAGIC
from utils.errors import DegenerateExtentError, FormatError, MeshIndexError
from utils.logger import logger

NO_FACE = 0xFFFFFFFF


@dataclass(frozen=True)
class Mesh:
    """UV 아틀라스를 가진 인덱스 삼각형 메쉬"""
    vertices: np.ndarray                  # [V, 3]
    faces: np.ndarray                     # [F, 3] int64
    uv_coords: np.ndarray                 # [T, 2]
    face_uv_indices: np.ndarray           # [F, 3] int64
    vertex_normals: Optional[np.ndarray] = None   # [V, 3]
    non_manifold: bool = False

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    def content_hash(self) -> str:
        """위치/면/UV 기반 SHA-1 (지오데식 캐시 키)"""
        h = hashlib.sha1()
        for arr in (self.vertices, self.faces, self.uv_coords, self.face_uv_indices):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def face_corners(self) -> np.ndarray:
        """[F, 3, 3] 면 꼭짓점 좌표"""
        return self.vertices[self.faces]

    def face_uv_corners(self) -> np.ndarray:
        """[F, 3, 2] 면 UV 좌표"""
        return self.uv_coords[self.face_uv_indices]


@dataclass
class TexelMap:
    """텍셀별 역 UV 기록 (H x W)"""
    width: int
    height: int
    valid: np.ndarray          # [H, W] bool
    face_id: np.ndarray        # [H, W] int64, 무효 텍셀은 -1
    bary: np.ndarray           # [H, W, 3]
    position: np.ndarray       # [H, W, 3]
    normal: np.ndarray         # [H, W, 3]
    overlap_texel_count: int = 0

    @property
    def valid_count(self) -> int:
        return int(self.valid.sum())

    def valid_indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """유효 텍셀의 (행, 열) 인덱스 - 행 우선 순서"""
        return np.nonzero(self.valid)

    def texel_uv(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """텍셀 중심 UV 좌표"""
        return np.stack([(np.asarray(cols) + 0.5) / self.width,
                         (np.asarray(rows) + 0.5) / self.height], axis=-1)


@dataclass
class AtlasReport:
    """UV 아틀라스 점검 결과"""
    chart_count: int
    overlap_texel_count: int
    uv_reuse: bool
    chart_coverage: List[float] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return self.overlap_texel_count == 0

    def to_dict(self) -> Dict:
        return {
            'chart_count': self.chart_count,
            'overlap_texel_count': self.overlap_texel_count,
            'uv_reuse': self.uv_reuse,
            'chart_coverage': [round(c, 6) for c in self.chart_coverage],
            'valid': self.is_valid,
        }


# ============================================================
# 로드 / 저장
# ============================================================

def build_mesh(vertices, faces, uv_coords, face_uv_indices,
               vertex_normals=None) -> Mesh:
    """배열로부터 Mesh 생성 (인덱스 검증 + 비다양체 검사)"""
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    uv_coords = np.asarray(uv_coords, dtype=np.float64).reshape(-1, 2)
    face_uv_indices = np.asarray(face_uv_indices, dtype=np.int64).reshape(-1, 3)

    if len(faces) != len(face_uv_indices):
        raise MeshIndexError("면 개수와 면 UV 인덱스 개수가 다릅니다")
    if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
        bad = int(faces.max()) if faces.max() >= len(vertices) else int(faces.min())
        raise MeshIndexError(f"면이 존재하지 않는 정점 {bad}을(를) 참조합니다 (정점 {len(vertices)}개)")
    if face_uv_indices.size and (face_uv_indices.min() < 0
                                 or face_uv_indices.max() >= len(uv_coords)):
        raise MeshIndexError(f"면 UV 인덱스가 범위를 벗어났습니다 (UV {len(uv_coords)}개)")

    _, counts = _unique_edges(faces)
    non_manifold = bool((counts > 2).any())
    if non_manifold:
        logger.warning(f"비다양체 모서리 {int((counts > 2).sum())}개 - 그대로 진행합니다")

    if vertex_normals is not None:
        vertex_normals = np.asarray(vertex_normals, dtype=np.float64).reshape(-1, 3)

    return Mesh(vertices, faces, uv_coords, face_uv_indices, vertex_normals, non_manifold)


def load_mesh(path: Union[str, Path]) -> Mesh:
    """OBJ 메쉬 로드 (vn은 읽지만 법선은 compute_normals로 다시 계산)"""
    data = read_obj(path)
    mesh = build_mesh(data['vertices'], data['faces'],
                      data['uv_coords'], data['face_uv_indices'])
    logger.info(f"메쉬 로드: {Path(path).name} (정점 {mesh.vertex_count}, 면 {mesh.face_count})")
    return mesh


def save_mesh(mesh: Mesh, path: Union[str, Path]):
    write_obj(path, mesh.vertices, mesh.uv_coords, mesh.faces,
              mesh.face_uv_indices, mesh.vertex_normals)


# ============================================================
# 연결 정보
# ============================================================

def _unique_edges(faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if len(faces) == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
    half = np.sort(faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    edges, counts = np.unique(half, axis=0, return_counts=True)
    return edges, counts


def edge_face_table(mesh: Mesh):
    """모서리-면 인접 정보

    Returns:
        edges [E, 2] (정렬된 정점 쌍), edge_of_half [3F] (반모서리 → 모서리 번호)
        반모서리 k 는 면 k // 3 의 (k % 3) → (k % 3 + 1) 모서리
    """
    faces = mesh.faces
    half = np.sort(faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    edges, inverse = np.unique(half, axis=0, return_inverse=True)
    return edges, inverse.reshape(-1)


def face_areas(mesh: Mesh) -> np.ndarray:
    corners = mesh.face_corners()
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def chart_labels(mesh: Mesh) -> Tuple[int, np.ndarray]:
    """UV 차트 라벨 - 같은 UV 모서리(UV 인덱스 쌍 + 정점 쌍)를 공유하는 면끼리 연결

    Returns:
        (차트 수, 면별 차트 번호 [F])
    """
    n_faces = mesh.face_count
    if n_faces == 0:
        return 0, np.zeros(0, dtype=np.int64)

    fv = mesh.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    ft = mesh.face_uv_indices[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    order = fv[:, 0] > fv[:, 1]
    fv[order] = fv[order][:, ::-1]
    ft[order] = ft[order][:, ::-1]
    keys = np.concatenate([fv, ft], axis=1)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    half_face = np.repeat(np.arange(n_faces), 3)

    # 같은 키를 가진 반모서리끼리 정렬 후 이웃 쌍 연결
    sort = np.argsort(inverse, kind='stable')
    same = inverse[sort][1:] == inverse[sort][:-1]
    a = half_face[sort][:-1][same]
    b = half_face[sort][1:][same]
    graph = coo_matrix((np.ones(len(a)), (a, b)), shape=(n_faces, n_faces))
    count, labels = connected_components(graph, directed=False)
    return int(count), labels.astype(np.int64)


# ============================================================
# 법선 / 정규화
# ============================================================

def compute_normals(mesh: Mesh) -> Mesh:
    """면적 가중 정점 법선 계산

    넓이 0인 면은 기여하지 않으며, 기여가 없는 정점은 (0,0,1) + 경고
    """
    corners = mesh.face_corners()
    # 외적의 크기 = 2 * 면적 → 그대로 누적하면 면적 가중 평균
    cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    cross[areas < DEGENERATE_AREA] = 0.0

    accum = np.zeros_like(mesh.vertices)
    for k in range(3):
        np.add.at(accum, mesh.faces[:, k], cross)

    lengths = np.linalg.norm(accum, axis=1)
    isolated = lengths < 1e-20
    normals = np.zeros_like(accum)
    normals[~isolated] = accum[~isolated] / lengths[~isolated, None]
    if isolated.any():
        normals[isolated] = (0.0, 0.0, 1.0)
        logger.warning(f"법선을 정할 수 없는 정점 {int(isolated.sum())}개 → (0,0,1) 사용")

    return replace(mesh, vertex_normals=normals)


def normalize_mesh(mesh: Mesh) -> Mesh:
    """원점 중심 [-0.5, 0.5]^3 으로 이동/균등 스케일 (가장 긴 축 = 1)"""
    if mesh.vertex_count == 0:
        raise DegenerateExtentError("정점이 없는 메쉬입니다")
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    extent = float((hi - lo).max())
    if extent < 1e-12:
        raise DegenerateExtentError("모든 정점이 한 점에 모여 있습니다")
    center = 0.5 * (lo + hi)
    vertices = (mesh.vertices - center) / extent
    return replace(mesh, vertices=vertices)


def prepare_mesh(mesh: Mesh) -> Mesh:
    """정규화 + 법선 계산"""
    return compute_normals(normalize_mesh(mesh))


# ============================================================
# 역 UV 매핑
# ============================================================

def _edge_function(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def _owns_edge(du: float, dv: float) -> bool:
    """경계 위 텍셀 중심의 소유 규칙 (반시계 삼각형 기준)"""
    return dv > 0 or (dv == 0 and du < 0)


def rasterize_uv_triangle(uv: np.ndarray, width: int, height: int):
    """UV 삼각형 하나를 텍셀 격자에 래스터화

    Args:
        uv: [3, 2] UV 좌표
    Returns:
        (rows, cols, bary[N, 3]) - bary는 입력 꼭짓점 순서 기준, 면적 0이면 None
    """
    pts = np.asarray(uv, dtype=np.float64) * (width, height)
    order = np.array([0, 1, 2])
    area2 = _edge_function(*pts[0], *pts[1], *pts[2])
    if abs(area2) < 1e-14:
        return None
    if area2 < 0:
        order = np.array([0, 2, 1])
        pts = pts[order]
        area2 = -area2

    lo = np.floor(pts.min(axis=0) - 0.5).astype(int)
    hi = np.ceil(pts.max(axis=0) - 0.5).astype(int)
    i0, j0 = max(lo[0], 0), max(lo[1], 0)
    i1, j1 = min(hi[0], width - 1), min(hi[1], height - 1)
    if i0 > i1 or j0 > j1:
        return None

    cols, rows = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1))
    px = cols.ravel() + 0.5
    py = rows.ravel() + 0.5

    inside = np.ones(px.shape, dtype=bool)
    weights = []
    for k in range(3):
        a, b = pts[k], pts[(k + 1) % 3]
        e = _edge_function(a[0], a[1], b[0], b[1], px, py)
        owned = _owns_edge(b[0] - a[0], b[1] - a[1])
        inside &= (e > 0) | ((e == 0) & owned)
        weights.append(e)

    if not inside.any():
        return None

    # 꼭짓점 k 의 가중치 = 마주보는 모서리 (k+1 → k+2) 의 edge function
    bary_sorted = np.stack([weights[1], weights[2], weights[0]], axis=1)[inside] / area2
    bary_sorted = np.clip(bary_sorted, 0.0, None)
    bary_sorted /= bary_sorted.sum(axis=1, keepdims=True)
    bary = np.empty_like(bary_sorted)
    bary[:, order] = bary_sorted
    return rows.ravel()[inside], cols.ravel()[inside], bary


def build_texel_map(mesh: Mesh, width: int, height: int) -> TexelMap:
    """역 UV 텍셀 맵 생성 (면 인덱스 순서대로 나중 면이 덮어씀)"""
    if width < 1 or height < 1:
        raise MeshIndexError(f"텍셀 맵 크기가 잘못되었습니다: {width}x{height}")
    if mesh.vertex_normals is None:
        mesh = compute_normals(mesh)

    face_id = np.full((height, width), -1, dtype=np.int64)
    bary = np.zeros((height, width, 3), dtype=np.float64)
    hits = np.zeros((height, width), dtype=np.int32)

    uv_corners = mesh.face_uv_corners()
    for f in range(mesh.face_count):
        raster = rasterize_uv_triangle(uv_corners[f], width, height)
        if raster is None:
            continue
        rows, cols, weights = raster
        face_id[rows, cols] = f
        bary[rows, cols] = weights
        hits[rows, cols] += 1

    valid = face_id >= 0
    position = np.zeros((height, width, 3), dtype=np.float64)
    normal = np.zeros((height, width, 3), dtype=np.float64)
    if valid.any():
        fids = face_id[valid]
        w = bary[valid]
        corners = mesh.vertices[mesh.faces[fids]]
        position[valid] = np.einsum('nk,nkd->nd', w, corners)
        n = np.einsum('nk,nkd->nd', w, mesh.vertex_normals[mesh.faces[fids]])
        length = np.linalg.norm(n, axis=1)
        flat = length < 1e-12
        if flat.any():
            fc = corners[flat]
            fn = np.cross(fc[:, 1] - fc[:, 0], fc[:, 2] - fc[:, 0])
            fl = np.linalg.norm(fn, axis=1)
            fn[fl > 0] /= fl[fl > 0, None]
            fn[fl == 0] = (0.0, 0.0, 1.0)
            n[flat] = fn
            length[flat] = 1.0
        normal[valid] = n / length[:, None]

    overlap = int((hits > 1).sum())
    if overlap:
        logger.warning(f"UV 차트 겹침: 텍셀 {overlap}개 (나중 면 우선)")
    logger.debug(f"텍셀 맵 {width}x{height}: 유효 텍셀 {int(valid.sum())}개")
    return TexelMap(width, height, valid, face_id, bary, position, normal, overlap)


def build_atlas_report(mesh: Mesh, texel_map: TexelMap) -> AtlasReport:
    """차트 수, 겹침, UV 재사용, 차트별 커버리지"""
    count, labels = chart_labels(mesh)
    coverage = []
    total = float(texel_map.width * texel_map.height)
    if count:
        texel_chart = labels[texel_map.face_id[texel_map.valid]]
        per_chart = np.bincount(texel_chart, minlength=count)
        coverage = [float(c) / total for c in per_chart]

    # 같은 UV 모서리를 세 면 이상이 공유하거나 텍셀이 겹치면 재사용
    ft = np.sort(mesh.face_uv_indices[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    _, uv_counts = np.unique(ft, axis=0, return_counts=True) if len(ft) else (None, np.zeros(0))
    uv_reuse = bool(texel_map.overlap_texel_count > 0 or (uv_counts > 2).any())
    return AtlasReport(count, texel_map.overlap_texel_count, uv_reuse, coverage)


# ============================================================
# STXM 입출력
# ============================================================

_TEXEL_DTYPE = np.dtype([
    ('valid', 'u1'), ('face', '<u4'),
    ('bary', '<f4', (3,)), ('pos', '<f4', (3,)), ('normal', '<f4', (3,)),
])


def save_texel_map(texel_map: TexelMap, path: Union[str, Path]):
    """STXM 덤프: magic, version, W, H, 텍셀별 {u8, u32, 3f32, 3f32, 3f32}"""
    records = np.zeros(texel_map.width * texel_map.height, dtype=_TEXEL_DTYPE)
    records['valid'] = texel_map.valid.ravel()
    face = texel_map.face_id.ravel()
    records['face'] = np.where(face >= 0, face, NO_FACE)
    records['bary'] = texel_map.bary.reshape(-1, 3)
    records['pos'] = texel_map.position.reshape(-1, 3)
    records['normal'] = texel_map.normal.reshape(-1, 3)

    writer = BinaryWriter(TEXEL_MAP_MAGIC)
    writer.u32(texel_map.width)
    writer.u32(texel_map.height)
    writer.array(records, _TEXEL_DTYPE)
    writer.save(path)


def load_texel_map(path: Union[str, Path]) -> TexelMap:
    reader = BinaryReader.open(path, TEXEL_MAP_MAGIC)
    reader.expect_version()
    width = reader.u32('width')
    height = reader.u32('height')
    records = reader.records(_TEXEL_DTYPE, width * height, 'texels')
    reader.finish()

    valid = records['valid'].astype(bool).reshape(height, width)
    face = records['face'].astype(np.int64)
    face[face == NO_FACE] = -1
    if (face[valid.ravel()] < 0).any():
        raise FormatError(f"{reader.name}: 유효 텍셀에 면 번호가 없습니다")
    return TexelMap(
        width, height, valid, face.reshape(height, width),
        records['bary'].astype(np.float64).reshape(height, width, 3),
        records['pos'].astype(np.float64).reshape(height, width, 3),
        records['normal'].astype(np.float64).reshape(height, width, 3),
    )
