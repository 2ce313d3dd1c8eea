"""
창 제한 지오데식 거리장

[방법]
- 그래프 노드: 메쉬 정점 V개 + 면 무게중심(Steiner 노드) F개
- 간선: 정점-정점(메쉬 모서리), 정점-무게중심(면 내부),
  dual_edges=True 이면 모서리를 공유하는 두 면의 무게중심끼리(공유 모서리 중점 경유)
- 소스 면의 세 꼭짓점 + 무게중심에서 실제 3D 오프셋을 더해 다중 시작 Dijkstra,
  반경(radius)에서 탐색 중단
- 간선 가중치는 모두 표면 위 경로 길이이므로 지오데식 >= 유클리드 거리
"""
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from geometry.mesh import Mesh, TexelMap, edge_face_table, face_areas
from threads.worker_pool import WorkerPool
from utils.binfmt import BinaryReader, BinaryWriter
from utils.constants import DEGENERATE_AREA, GEODESIC_MAGIC, GEODESIC_QUANTIZATION, GEODESIC_RADIUS
from utils.errors import DegenerateFaceError, FormatError, MeshIndexError, UsageError
from utils.logger import logger


@dataclass(frozen=True)
class SurfacePoint:
    """면 번호 + 무게중심 좌표로 지정한 표면점"""
    face_id: int
    barycentric: Tuple[float, float, float]

    def __post_init__(self):
        b = np.asarray(self.barycentric, dtype=np.float64)
        if b.shape != (3,) or (b < -1e-9).any() or abs(b.sum() - 1.0) > 1e-6:
            raise UsageError(f"잘못된 무게중심 좌표: {self.barycentric}")

    def position(self, mesh: Mesh) -> np.ndarray:
        return np.asarray(self.barycentric) @ mesh.vertices[mesh.faces[self.face_id]]


@dataclass
class EdgeGraph:
    """지오데식 근사용 거리 그래프"""
    matrix: sparse.csr_matrix      # [(V+F), (V+F)] 대칭
    n_vertices: int
    n_faces: int
    degenerate: np.ndarray         # [F] bool
    mesh_hash: str
    dual_edges: bool = True

    @property
    def node_count(self) -> int:
        return self.n_vertices + self.n_faces

    @property
    def edge_count(self) -> int:
        return int(self.matrix.nnz // 2)


@dataclass
class GeodesicField:
    """소스 표면점에서 반경 내 정점까지의 거리 (없는 정점 = 반경 밖)"""
    source: SurfacePoint
    radius: float
    vertex_ids: np.ndarray         # 정렬된 정점 번호
    distances: np.ndarray
    mesh: Mesh = field(repr=False, default=None)
    degenerate: np.ndarray = field(repr=False, default=None)

    def vertex_distance(self, vertex: int) -> Optional[float]:
        k = np.searchsorted(self.vertex_ids, vertex)
        if k < len(self.vertex_ids) and self.vertex_ids[k] == vertex:
            return float(self.distances[k])
        return None

    def distances_to(self, face_ids: np.ndarray, barys: np.ndarray) -> np.ndarray:
        """여러 표면점까지의 거리 - 반경 밖이면 NaN"""
        mesh = self.mesh
        face_ids = np.asarray(face_ids, dtype=np.int64)
        barys = np.asarray(barys, dtype=np.float64).reshape(-1, 3)
        out = np.full(len(face_ids), np.nan)
        if len(face_ids) == 0:
            return out
        if face_ids.min() < 0 or face_ids.max() >= mesh.face_count:
            raise MeshIndexError(f"면 번호가 범위를 벗어났습니다 (면 {mesh.face_count}개)")

        corners = mesh.faces[face_ids]
        k = np.searchsorted(self.vertex_ids, corners)
        k_clip = np.minimum(k, max(len(self.vertex_ids) - 1, 0))
        if len(self.vertex_ids):
            present = self.vertex_ids[k_clip] == corners
            d = self.distances[k_clip]
        else:
            present = np.zeros(corners.shape, dtype=bool)
            d = np.zeros(corners.shape)
        inside = present.all(axis=1)
        out[inside] = np.einsum('nk,nk->n', barys[inside], d[inside])

        # 같은 면 위의 점은 평면 직선 거리
        same = face_ids == self.source.face_id
        if same.any():
            src = self.source.position(mesh)
            pts = np.einsum('nk,nkd->nd', barys[same], mesh.vertices[corners[same]])
            out[same] = np.linalg.norm(pts - src, axis=1)

        if self.degenerate is not None:
            out[self.degenerate[face_ids]] = np.nan
        return out


# ============================================================
# 그래프 / 거리장
# ============================================================

def build_edge_graph(mesh: Mesh, dual_edges: bool = True) -> EdgeGraph:
    """정점 + 면 무게중심 그래프 (넓이 0인 면은 간선을 만들지 않음)"""
    nv, nf = mesh.vertex_count, mesh.face_count
    areas = face_areas(mesh)
    degenerate = areas < DEGENERATE_AREA
    good = np.nonzero(~degenerate)[0]
    verts = mesh.vertices
    centroids = verts[mesh.faces].mean(axis=1) if nf else np.zeros((0, 3))

    rows, cols, weights = [], [], []

    # 정점-정점
    if len(good):
        half = np.sort(mesh.faces[good][:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        vv = np.unique(half, axis=0)
        rows.append(vv[:, 0])
        cols.append(vv[:, 1])
        weights.append(np.linalg.norm(verts[vv[:, 0]] - verts[vv[:, 1]], axis=1))

        # 정점-무게중심
        vc_v = mesh.faces[good].reshape(-1)
        vc_f = np.repeat(good, 3)
        rows.append(vc_v)
        cols.append(nv + vc_f)
        weights.append(np.linalg.norm(verts[vc_v] - centroids[vc_f], axis=1))

    # 무게중심-무게중심 (공유 모서리 중점 경유)
    if dual_edges and len(good) > 1:
        edges, edge_of_half = edge_face_table(mesh)
        half_face = np.repeat(np.arange(nf), 3)
        keep = ~degenerate[half_face]
        eid = edge_of_half[keep]
        hf = half_face[keep]
        order = np.lexsort((hf, eid))
        eid, hf = eid[order], hf[order]
        same = eid[1:] == eid[:-1]
        fa, fb, ee = hf[:-1][same], hf[1:][same], eid[1:][same]
        distinct = fa != fb
        fa, fb, ee = fa[distinct], fb[distinct], ee[distinct]
        if len(fa):
            mid = 0.5 * (verts[edges[ee, 0]] + verts[edges[ee, 1]])
            w = (np.linalg.norm(centroids[fa] - mid, axis=1)
                 + np.linalg.norm(mid - centroids[fb], axis=1))
            pairs = np.unique(np.stack([np.minimum(fa, fb), np.maximum(fa, fb)], axis=1),
                              axis=0, return_index=True)[1]
            rows.append(nv + fa[pairs])
            cols.append(nv + fb[pairs])
            weights.append(w[pairs])

    n = nv + nf
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        w = np.concatenate(weights)
    else:
        r = c = np.zeros(0, dtype=np.int64)
        w = np.zeros(0)
    matrix = sparse.csr_matrix((np.concatenate([w, w]), (np.concatenate([r, c]), np.concatenate([c, r]))),
                               shape=(n, n))
    logger.debug(f"지오데식 그래프: 노드 {n}, 간선 {matrix.nnz // 2}")
    return EdgeGraph(matrix, nv, nf, degenerate, mesh.content_hash(), dual_edges)


def geodesic_field(mesh: Mesh, graph: EdgeGraph, source: SurfacePoint,
                   radius: float = GEODESIC_RADIUS) -> GeodesicField:
    """소스 표면점에서 반경 내 정점 거리장 계산"""
    if radius <= 0:
        raise UsageError(f"반경은 양수여야 합니다: {radius}")
    f = int(source.face_id)
    if not 0 <= f < mesh.face_count:
        raise MeshIndexError(f"소스 면 번호 {f} 이(가) 범위를 벗어났습니다")
    if graph.degenerate[f]:
        raise DegenerateFaceError(f"넓이가 0인 면 {f} 에서 거리장을 만들 수 없습니다")

    tri = mesh.faces[f]
    corners = mesh.vertices[tri]
    point = np.asarray(source.barycentric) @ corners
    seeds = np.array([tri[0], tri[1], tri[2], graph.n_vertices + f])
    seed_pos = np.vstack([corners, corners.mean(axis=0)])
    offsets = np.linalg.norm(seed_pos - point, axis=1)

    rows = dijkstra(graph.matrix, directed=False, indices=seeds, limit=radius)
    total = (rows[:, :graph.n_vertices] + offsets[:, None]).min(axis=0)
    ids = np.nonzero(total <= radius)[0]
    return GeodesicField(source, float(radius), ids.astype(np.int64), total[ids], mesh, graph.degenerate)


def geodesic_distance(geo_field: GeodesicField, target: SurfacePoint) -> Optional[float]:
    """표면점까지의 거리 - 반경 밖이면 None"""
    d = geo_field.distances_to(np.array([target.face_id]), np.asarray(target.barycentric)[None])
    return None if np.isnan(d[0]) else float(d[0])


# ============================================================
# 캐시
# ============================================================

def quantize_bary(bary, levels: int = GEODESIC_QUANTIZATION) -> Tuple[int, int, int]:
    """무게중심 좌표를 1/levels 격자로 양자화 (합 = levels 유지)"""
    b = np.asarray(bary, dtype=np.float64) * levels
    q = np.floor(b).astype(int)
    rest = levels - int(q.sum())
    # 소수부가 큰 순서(동률은 앞 성분)로 나머지 분배
    for k in np.argsort(-(b - q), kind='stable')[:rest]:
        q[k] += 1
    return int(q[0]), int(q[1]), int(q[2])


class GeodesicCache:
    """(메쉬 해시, 면, 양자화 무게중심, 반경) 키의 거리장 메모

    읽기는 동시에, 쓰기는 잠금으로 직렬화
    """

    def __init__(self, mesh: Mesh, graph: Optional[EdgeGraph] = None,
                 radius: float = GEODESIC_RADIUS):
        self.mesh = mesh
        self.graph = graph if graph is not None else build_edge_graph(mesh)
        self.radius = float(radius)
        self.mesh_hash = mesh.content_hash()
        self._fields: Dict[Tuple, GeodesicField] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._fields)

    def key(self, face_id: int, bary) -> Tuple:
        return (self.mesh_hash, int(face_id), quantize_bary(bary), self.radius)

    def field(self, face_id: int, bary) -> Optional[GeodesicField]:
        """표면점의 거리장 (넓이 0인 면이면 None)"""
        if self.graph.degenerate[face_id]:
            return None
        key = self.key(face_id, bary)
        cached = self._fields.get(key)
        if cached is not None:
            self.hits += 1
            return cached
        q = np.asarray(key[2], dtype=np.float64) / GEODESIC_QUANTIZATION
        built = geodesic_field(self.mesh, self.graph, SurfacePoint(int(face_id), tuple(q)), self.radius)
        with self._lock:
            self.misses += 1
            return self._fields.setdefault(key, built)

    def fields(self):
        return dict(self._fields)

    def insert(self, key: Tuple, value: GeodesicField):
        with self._lock:
            self._fields[key] = value


def precompute_texel_fields(cache: GeodesicCache, texel_map: TexelMap, workers: int = 1) -> int:
    """유효 텍셀 전체의 거리장을 미리 계산 (면 단위로 묶어 처리)

    Returns:
        캐시된 거리장 수
    """
    rows, cols = texel_map.valid_indices()
    faces = texel_map.face_id[rows, cols]
    barys = texel_map.bary[rows, cols]
    order = np.argsort(faces, kind='stable')
    groups = np.split(order, np.nonzero(np.diff(faces[order]))[0] + 1) if len(order) else []

    def run(group):
        for k in group:
            cache.field(faces[k], barys[k])

    with WorkerPool(workers) as pool:
        pool.map(run, groups)
    logger.info(f"지오데식 거리장 {len(cache)}개 계산 완료")
    return len(cache)


def save_geodesic_cache(cache: GeodesicCache, path: Union[str, Path]):
    """STXD 덤프: 메쉬 해시, 반경, 거리장 수, 거리장별 {면, 양자화 좌표, 정점/거리 목록}"""
    writer = BinaryWriter(GEODESIC_MAGIC)
    writer.text(cache.mesh_hash)
    writer.f64(cache.radius)
    items = sorted(cache.fields().items(), key=lambda kv: (kv[0][1], kv[0][2]))
    writer.u32(len(items))
    for key, fld in items:
        writer.u32(key[1])
        for q in key[2]:
            writer.u32(q)
        writer.u32(len(fld.vertex_ids))
        writer.array(fld.vertex_ids, '<u4')
        writer.array(fld.distances, '<f8')
    writer.save(path)


def load_geodesic_cache(path: Union[str, Path], mesh: Mesh,
                        graph: Optional[EdgeGraph] = None) -> GeodesicCache:
    reader = BinaryReader.open(path, GEODESIC_MAGIC)
    reader.expect_version()
    mesh_hash = reader.text('mesh_hash')
    if mesh_hash != mesh.content_hash():
        raise FormatError(f"{reader.name}: 다른 메쉬로 만든 지오데식 캐시입니다")
    radius = reader.f64('radius')
    cache = GeodesicCache(mesh, graph, radius)
    count = reader.u32('field_count')
    for k in range(count):
        face = reader.u32(f'field[{k}].face')
        q = tuple(reader.u32(f'field[{k}].bary') for _ in range(3))
        n = reader.u32(f'field[{k}].count')
        ids = reader.array('<u4', (n,), f'field[{k}].ids').astype(np.int64)
        dists = reader.array('<f8', (n,), f'field[{k}].dists')
        if face >= mesh.face_count or sum(q) != GEODESIC_QUANTIZATION:
            raise FormatError(f"{reader.name}: field[{k}] 값이 잘못되었습니다")
        src = SurfacePoint(int(face), tuple(np.asarray(q, dtype=np.float64) / GEODESIC_QUANTIZATION))
        cache.insert((mesh_hash, int(face), q, radius), GeodesicField(src, radius, ids, dists, mesh, cache.graph.degenerate))
    reader.finish()
    logger.info(f"지오데식 캐시 로드: 거리장 {count}개")
    return cache
