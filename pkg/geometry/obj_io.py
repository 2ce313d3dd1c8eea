"""
Wavefront OBJ 입출력

[지원 범위]
- v, vt, vn, f (v/vt, v/vt/vn, 음수 인덱스)
- 다각형 면은 첫 꼭짓점 기준 팬(fan) 삼각분할
- o / g / usemtl / s / mtllib 등은 무시
"""
from pathlib import Path
from typing import List, Union

import numpy as np

from utils.errors import AtlasRequiredError, FormatError, MeshIndexError
from utils.logger import logger


def _resolve_index(raw: str, count: int, kind: str, line_no: int) -> int:
    """OBJ 1-기반(음수 허용) 인덱스를 0-기반으로 변환"""
    try:
        value = int(raw)
    except ValueError:
        raise FormatError(f"{line_no}행: 잘못된 {kind} 인덱스 '{raw}'")
    if value < 0:
        return count + value
    if value == 0:
        raise MeshIndexError(f"{line_no}행: {kind} 인덱스 0은 허용되지 않습니다")
    return value - 1


def parse_obj(text: str):
    """OBJ 텍스트 파싱

    Returns:
        dict(vertices, uv_coords, normals, faces, face_uv_indices)
    """
    vertices: List[List[float]] = []
    texverts: List[List[float]] = []
    normals: List[List[float]] = []
    faces: List[List[int]] = []
    face_uvs: List[List[int]] = []
    missing_uv = False

    for line_no, rawline in enumerate(text.splitlines(), 1):
        line = rawline.strip()
        if not line or line[0] == '#':
            continue

        fields = line.split()
        cmd, pars = fields[0], fields[1:]

        try:
            if cmd == 'v':
                vertices.append([float(pars[0]), float(pars[1]), float(pars[2])])
            elif cmd == 'vt':
                texverts.append([float(pars[0]), float(pars[1])])
            elif cmd == 'vn':
                normals.append([float(pars[0]), float(pars[1]), float(pars[2])])
            elif cmd == 'f':
                if len(pars) < 3:
                    raise FormatError(f"{line_no}행: 면의 꼭짓점이 3개 미만입니다")
                fv, ft = [], []
                for corner in pars:
                    parts = corner.split('/')
                    fv.append(_resolve_index(parts[0], len(vertices), 'v', line_no))
                    if len(parts) < 2 or parts[1] == '':
                        missing_uv = True
                        ft.append(-1)
                    else:
                        ft.append(_resolve_index(parts[1], len(texverts), 'vt', line_no))
                # 팬 삼각분할
                for k in range(1, len(fv) - 1):
                    faces.append([fv[0], fv[k], fv[k + 1]])
                    face_uvs.append([ft[0], ft[k], ft[k + 1]])
        except (IndexError, ValueError):
            raise FormatError(f"{line_no}행: 해석할 수 없는 '{cmd}' 레코드")

    if missing_uv or not texverts:
        raise AtlasRequiredError("UV 좌표(vt)가 없는 메쉬입니다 - UV 아틀라스가 필요합니다")

    return {
        'vertices': np.array(vertices, dtype=np.float64).reshape(-1, 3),
        'uv_coords': np.array(texverts, dtype=np.float64).reshape(-1, 2),
        'normals': np.array(normals, dtype=np.float64).reshape(-1, 3),
        'faces': np.array(faces, dtype=np.int64).reshape(-1, 3),
        'face_uv_indices': np.array(face_uvs, dtype=np.int64).reshape(-1, 3),
    }


def read_obj(path: Union[str, Path]):
    """OBJ 파일 읽기 (parse_obj 결과 반환)"""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"메쉬 파일이 없습니다: {path}")
    logger.debug(f"OBJ 읽기: {path}")
    return parse_obj(path.read_text(encoding='utf-8', errors='replace'))


def write_obj(path: Union[str, Path], vertices: np.ndarray, uv_coords: np.ndarray,
              faces: np.ndarray, face_uv_indices: np.ndarray, normals: np.ndarray = None):
    """OBJ 파일 쓰기 (정점 법선이 있으면 v/vt/vn 형식)"""
    lines = ['# TexelFusion mesh']
    lines += [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in vertices]
    lines += [f"vt {u:.17g} {v:.17g}" for u, v in uv_coords]
    if normals is not None:
        lines += [f"vn {x:.17g} {y:.17g} {z:.17g}" for x, y, z in normals]
    for f, t in zip(faces + 1, face_uv_indices + 1):
        if normals is not None:
            lines.append('f ' + ' '.join(f"{a}/{b}/{a}" for a, b in zip(f, t)))
        else:
            lines.append('f ' + ' '.join(f"{a}/{b}" for a, b in zip(f, t)))
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')
