"""
메쉬 검증기

[검증 항목]
- 정점 좌표 유한성
- 면 / UV 인덱스 범위
- UV 좌표 범위 [0, 1]
- 넓이 0 인 면, 비다양체 모서리 (경고)
"""
from typing import List

import numpy as np

from geometry.mesh import Mesh, face_areas
from utils.constants import DEGENERATE_AREA
from utils.errors import MeshIndexError
from .base_validator import BaseValidator


class MeshValidator(BaseValidator):
    """Mesh 객체 검증"""

    error_class = MeshIndexError

    def problems(self, mesh: Mesh) -> List[str]:
        found = []
        if mesh.vertex_count == 0 or mesh.face_count == 0:
            found.append("정점 또는 면이 없습니다")
            return found
        if not self.is_finite(mesh.vertices):
            found.append("유한하지 않은 정점 좌표가 있습니다")
        if mesh.faces.min() < 0 or mesh.faces.max() >= mesh.vertex_count:
            found.append("면의 정점 인덱스가 범위를 벗어납니다")
        if len(mesh.uv_coords) == 0:
            found.append("UV 좌표가 없습니다")
        elif mesh.face_uv_indices.min() < 0 or mesh.face_uv_indices.max() >= len(mesh.uv_coords):
            found.append("면의 UV 인덱스가 범위를 벗어납니다")
        return found

    def warnings(self, mesh: Mesh) -> List[str]:
        notes = []
        uv = mesh.uv_coords
        if len(uv) and ((uv < 0).any() or (uv > 1).any()):
            notes.append("UV 좌표가 [0, 1] 범위를 벗어나 잘려서 래스터화됩니다")
        degenerate = int((face_areas(mesh) < DEGENERATE_AREA).sum())
        if degenerate:
            notes.append(f"넓이 0 인 면 {degenerate}개")
        if mesh.non_manifold:
            notes.append("비다양체 모서리가 있습니다")
        if mesh.vertex_normals is not None and not np.isfinite(mesh.vertex_normals).all():
            notes.append("유한하지 않은 정점 법선이 있습니다")
        return notes
