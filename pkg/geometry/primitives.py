"""
절차적 메쉬 (UV 아틀라스 포함)

학습용 합성 장면과 테스트 고정 데이터에 사용
- sphere / torus / cylinder / capsule : 매개변수 곡면, 이음선에서 3D 정점은 용접, UV는 분리
- cube : 면마다 독립 차트 (3x2 UV 격자)
- grid / quad / sphere_cap : 단일 차트 평면/곡면 조각
- icosphere : 북극에 정점이 오도록 회전 (UV는 의미 없는 구면 좌표)
"""
import math
from typing import Callable, Dict, Tuple

import numpy as np

from geometry.mesh import Mesh, build_mesh
from utils.errors import UsageError

UV_MARGIN = 0.02


def _parametric(nu: int, nv: int, fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                wrap_u: bool = False, wrap_v: bool = False,
                pole_bottom: bool = False, pole_top: bool = False,
                uv_rect: Tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)) -> Mesh:
    """(s, t) ∈ [0,1]^2 격자 곡면 생성

    fn(s, t) -> [N, 3]; ∂s x ∂t 가 바깥쪽을 향해야 한다
    """
    s = np.linspace(0.0, 1.0, nu + 1)
    t = np.linspace(0.0, 1.0, nv + 1)
    ss, tt = np.meshgrid(s, t)              # [nv+1, nu+1]
    grid_id = np.arange((nv + 1) * (nu + 1)).reshape(nv + 1, nu + 1)

    # 3D 정점 용접 테이블
    vid = grid_id.copy()
    if wrap_u:
        vid[:, nu] = vid[:, 0]
    if wrap_v:
        vid[nv, :] = vid[0, :]
    if pole_bottom:
        vid[0, :] = vid[0, 0]
    if pole_top:
        vid[nv, :] = vid[nv, 0]
    used, vid_compact = np.unique(vid.ravel(), return_inverse=True)
    vid_compact = vid_compact.reshape(vid.shape)
    positions = fn(ss.ravel(), tt.ravel())[used]

    u0, v0, u1, v1 = uv_rect
    uv = np.stack([u0 + (u1 - u0) * ss.ravel(), v0 + (v1 - v0) * tt.ravel()], axis=1)

    faces, face_uvs = [], []
    for i in range(nv):
        for j in range(nu):
            a, b, c, d = (i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)
            for tri in ((a, b, c), (a, c, d)):
                fv = [vid_compact[p] for p in tri]
                if len(set(fv)) < 3:
                    continue
                faces.append(fv)
                face_uvs.append([grid_id[p] for p in tri])
    return build_mesh(positions, faces, uv, face_uvs)


def uv_sphere(segments: int = 32, rings: int = 16, radius: float = 0.5) -> Mesh:
    """위경도 구 (u=0/1 이음선 하나)"""
    def fn(s, t):
        phi = 2.0 * math.pi * s
        theta = math.pi * (t - 0.5)
        return radius * np.stack([np.sin(phi) * np.cos(theta), np.sin(theta),
                                  np.cos(phi) * np.cos(theta)], axis=1)
    return _parametric(segments, rings, fn, wrap_u=True, pole_bottom=True, pole_top=True)


def torus(segments: int = 32, sides: int = 16, major: float = 0.35, minor: float = 0.15) -> Mesh:
    """토러스 (u, v 두 방향 이음선)"""
    def fn(s, t):
        phi = 2.0 * math.pi * s
        theta = 2.0 * math.pi * t
        ring = major + minor * np.cos(theta)
        return np.stack([ring * np.sin(phi), minor * np.sin(theta), ring * np.cos(phi)], axis=1)
    return _parametric(segments, sides, fn, wrap_u=True, wrap_v=True)


def cylinder(segments: int = 32, stacks: int = 8, radius: float = 0.3, height: float = 1.0) -> Mesh:
    """뚜껑 없는 원통 (세로 이음선 하나)"""
    def fn(s, t):
        phi = 2.0 * math.pi * s
        return np.stack([radius * np.sin(phi), height * (t - 0.5), radius * np.cos(phi)], axis=1)
    return _parametric(segments, stacks, fn, wrap_u=True)


def capsule(segments: int = 32, stacks: int = 24, radius: float = 0.25, height: float = 0.5) -> Mesh:
    """캡슐 (원통 + 반구 2개), 윤곽선 호 길이로 매개변수화"""
    quarter = 0.5 * math.pi * radius
    total = 2.0 * quarter + height

    def fn(s, t):
        phi = 2.0 * math.pi * s
        sigma = t * total
        rho = np.empty_like(sigma)
        y = np.empty_like(sigma)
        bottom = sigma < quarter
        top = sigma > quarter + height
        side = ~bottom & ~top
        alpha = -0.5 * math.pi + sigma[bottom] / radius
        rho[bottom] = radius * np.cos(alpha)
        y[bottom] = -0.5 * height + radius * np.sin(alpha)
        rho[side] = radius
        y[side] = -0.5 * height + (sigma[side] - quarter)
        alpha = (sigma[top] - quarter - height) / radius
        rho[top] = radius * np.cos(alpha)
        y[top] = 0.5 * height + radius * np.sin(alpha)
        return np.stack([rho * np.sin(phi), y, rho * np.cos(phi)], axis=1)
    return _parametric(segments, stacks, fn, wrap_u=True, pole_bottom=True, pole_top=True)


# 큐브 면: (원점, s 축, t 축) - s x t = 바깥 법선
_CUBE_FACES = [
    ((-0.5, -0.5, 0.5), (1, 0, 0), (0, 1, 0)),     # +z
    ((0.5, -0.5, -0.5), (-1, 0, 0), (0, 1, 0)),    # -z
    ((0.5, -0.5, 0.5), (0, 0, -1), (0, 1, 0)),     # +x
    ((-0.5, -0.5, -0.5), (0, 0, 1), (0, 1, 0)),    # -x
    ((-0.5, 0.5, 0.5), (1, 0, 0), (0, 0, -1)),     # +y
    ((-0.5, -0.5, -0.5), (1, 0, 0), (0, 0, 1)),    # -y
]


def cube(subdivisions: int = 4, size: float = 1.0) -> Mesh:
    """면별 차트 큐브 (3x2 UV 격자, 차트 사이 여백), 3D 정점은 용접"""
    n = subdivisions
    s = np.linspace(0.0, 1.0, n + 1)
    ss, tt = np.meshgrid(s, s)
    local = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)

    positions, uvs, faces = [], [], []
    for k, (origin, axis_s, axis_t) in enumerate(_CUBE_FACES):
        base = k * (n + 1) ** 2
        pts = (np.asarray(origin) + ss.ravel()[:, None] * np.asarray(axis_s)
               + tt.ravel()[:, None] * np.asarray(axis_t)) * size
        positions.append(pts)
        col, row = k % 3, k // 3
        m = UV_MARGIN
        uvs.append(np.stack([(col + m + (1 - 2 * m) * ss.ravel()) / 3.0,
                             (row + m + (1 - 2 * m) * tt.ravel()) / 2.0], axis=1))
        for i in range(n):
            for j in range(n):
                a, b, c, d = local[i, j], local[i, j + 1], local[i + 1, j + 1], local[i + 1, j]
                faces += [[base + a, base + b, base + c], [base + a, base + c, base + d]]

    positions = np.concatenate(positions)
    uv = np.concatenate(uvs)
    # 모서리 정점 용접 (반올림 좌표 기준)
    key = np.round(positions / size * 2 * n).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    face_uvs = np.asarray(faces)
    return build_mesh(positions[first], inverse[face_uvs], uv, face_uvs)


def grid(n: int = 10, size: float = 1.0) -> Mesh:
    """z=0 평면의 [0, size]^2 격자 (대각선은 (i,j)-(i+1,j+1))"""
    def fn(s, t):
        return np.stack([s * size, t * size, np.zeros_like(s)], axis=1)
    return _parametric(n, n, fn)


def quad(size: float = 1.0, z: float = 0.0) -> Mesh:
    """+z 를 향한 정사각형 (삼각형 2개, UV = 전체 정사각형)"""
    h = 0.5 * size
    vertices = [(-h, -h, z), (h, -h, z), (h, h, z), (-h, h, z)]
    uv = [(0, 0), (1, 0), (1, 1), (0, 1)]
    faces = [(0, 1, 2), (0, 2, 3)]
    return build_mesh(vertices, faces, uv, faces)


def sphere_cap(n: int = 12, angle: float = math.radians(40.0), radius: float = 0.5) -> Mesh:
    """단일 차트 구면 조각 (UV 이음선 없음)"""
    spread = math.tan(angle)

    def fn(s, t):
        d = np.stack([(2 * s - 1) * spread, (2 * t - 1) * spread, np.ones_like(s)], axis=1)
        return radius * d / np.linalg.norm(d, axis=1, keepdims=True)
    m = UV_MARGIN
    return _parametric(n, n, fn, uv_rect=(m, m, 1 - m, 1 - m))


_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTICES = [
    (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
    (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
    (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
]
_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def icosphere(level: int = 2, radius: float = 1.0) -> Mesh:
    """정이십면체 세분 구 - 정점 하나가 (0, radius, 0)"""
    verts = [np.asarray(v, dtype=np.float64) / np.linalg.norm(v) for v in _ICO_VERTICES]
    faces = [tuple(f) for f in _ICO_FACES]

    for _ in range(level):
        cache: Dict[Tuple[int, int], int] = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined

    v = np.asarray(verts)
    # 정점 (0, 1, φ) 을 +y 로 회전 (x 축 기준)
    beta = math.atan2(_PHI, 1.0)
    y = v[:, 1] * math.cos(beta) + v[:, 2] * math.sin(beta)
    z = -v[:, 1] * math.sin(beta) + v[:, 2] * math.cos(beta)
    v = np.stack([v[:, 0], y, z], axis=1) * radius

    f = np.asarray(faces, dtype=np.int64)
    tri = v[f]
    outward = np.einsum('nd,nd->n', np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), tri.mean(axis=1))
    f[outward < 0] = f[outward < 0][:, ::-1]

    uv = np.stack([np.arctan2(v[:, 0], v[:, 2]) / (2 * math.pi) + 0.5,
                   np.arccos(np.clip(-v[:, 1] / radius, -1, 1)) / math.pi], axis=1)
    return build_mesh(v, f, uv, f)


PRIMITIVES = {
    'sphere': uv_sphere,
    'torus': torus,
    'cube': cube,
    'capsule': capsule,
    'cylinder': cylinder,
    'grid': grid,
    'quad': quad,
    'sphere_cap': sphere_cap,
    'icosphere': icosphere,
}


def make_primitive(kind: str, **kwargs) -> Mesh:
    if kind not in PRIMITIVES:
        raise UsageError(f"알 수 없는 기본 도형: {kind} (가능: {', '.join(PRIMITIVES)})")
    return PRIMITIVES[kind](**kwargs)
