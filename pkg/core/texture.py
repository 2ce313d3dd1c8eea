"""
텍스처 아틀라스 T (H x W x 3) 와 채움 마스크

[규약]
- filled 가 False 인 텍셀의 색은 항상 (0, 0, 0)
- valid 는 텍셀 맵에서 복사한 UV 차트 내부 여부
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from geometry.mesh import TexelMap
from utils.binfmt import BinaryReader, BinaryWriter
from utils.constants import GUTTER_PADDING, TEXTURE_MAGIC
from utils.errors import DimensionMismatchError, FormatError
from utils.image_io import load_mask, load_rgb, save_mask, save_rgb


@dataclass
class Texture:
    colors: np.ndarray     # [H, W, 3]
    filled: np.ndarray     # [H, W] bool
    valid: np.ndarray      # [H, W] bool

    @property
    def width(self) -> int:
        return self.colors.shape[1]

    @property
    def height(self) -> int:
        return self.colors.shape[0]

    @classmethod
    def empty(cls, texel_map: TexelMap) -> 'Texture':
        h, w = texel_map.height, texel_map.width
        return cls(np.zeros((h, w, 3)), np.zeros((h, w), dtype=bool), texel_map.valid.copy())

    @classmethod
    def from_colors(cls, colors: np.ndarray, texel_map: TexelMap,
                    filled: Optional[np.ndarray] = None) -> 'Texture':
        """색 배열로 텍스처 생성 (filled 미지정 시 유효 텍셀 전체)"""
        colors = np.asarray(colors, dtype=np.float64)
        if colors.shape[:2] != (texel_map.height, texel_map.width):
            raise DimensionMismatchError(
                f"텍스처 크기 {colors.shape[1]}x{colors.shape[0]} 가 텍셀 맵 "
                f"{texel_map.width}x{texel_map.height} 와 다릅니다")
        mask = texel_map.valid.copy() if filled is None else np.asarray(filled, dtype=bool).copy()
        tex = cls(np.clip(colors, 0.0, 1.0).copy(), mask, texel_map.valid.copy())
        tex.enforce_sentinel()
        return tex

    def copy(self) -> 'Texture':
        return Texture(self.colors.copy(), self.filled.copy(), self.valid.copy())

    def enforce_sentinel(self):
        """빈 텍셀 색을 검정으로"""
        self.colors[~self.filled] = 0.0

    def check_same_shape(self, other: 'Texture'):
        if self.colors.shape != other.colors.shape:
            raise DimensionMismatchError(
                f"텍스처 크기가 다릅니다: {self.width}x{self.height} vs {other.width}x{other.height}")


def pad_texture(texture: Texture, texels: int = GUTTER_PADDING) -> Texture:
    """렌더링 전용 여백 확장 - 채워진 텍셀 색을 가장 가까운 빈 텍셀로 복사

    texels 거리 이내의 빈 텍셀만 채운다 (차트 내부 구멍도 포함)
    """
    if texels <= 0 or texture.filled.all() or not texture.filled.any():
        return texture.copy()
    dist, (rows, cols) = ndimage.distance_transform_edt(~texture.filled, return_indices=True)
    grow = (~texture.filled) & (dist <= texels)
    out = texture.copy()
    out.colors[grow] = texture.colors[rows[grow], cols[grow]]
    out.filled = texture.filled | grow
    return out


# ============================================================
# 저장 / 읽기
# ============================================================

def save_texture_png(texture: Texture, path: Union[str, Path], mask_path: Union[str, Path] = None):
    """8비트 PNG 저장 (v=1 이 이미지 위쪽) + 선택적 채움 마스크 PNG"""
    save_rgb(path, np.flipud(texture.colors))
    if mask_path is not None:
        save_mask(mask_path, np.flipud(texture.filled))


def load_texture_png(path: Union[str, Path], texel_map: TexelMap,
                     mask_path: Union[str, Path] = None) -> Texture:
    image, alpha = load_rgb(path)
    colors = np.flipud(image)
    filled = None
    if mask_path is not None and Path(mask_path).exists():
        filled = np.flipud(load_mask(mask_path)) & texel_map.valid
    elif alpha is not None:
        filled = np.flipud(alpha) & texel_map.valid
    return Texture.from_colors(colors, texel_map, filled)


def save_texture_binary(texture: Texture, path: Union[str, Path]):
    """STXT: magic, version, W, H, f32 RGB [H*W*3], u8 filled [H*W], u8 valid [H*W]"""
    writer = BinaryWriter(TEXTURE_MAGIC)
    writer.u32(texture.width)
    writer.u32(texture.height)
    writer.array(texture.colors, '<f4')
    writer.array(texture.filled, 'u1')
    writer.array(texture.valid, 'u1')
    writer.save(path)


def load_texture_binary(path: Union[str, Path]) -> Texture:
    reader = BinaryReader.open(path, TEXTURE_MAGIC)
    reader.expect_version()
    w = reader.u32('width')
    h = reader.u32('height')
    colors = reader.array('<f4', (h, w, 3), 'colors').astype(np.float64)
    filled = reader.array('u1', (h, w), 'filled').astype(bool)
    valid = reader.array('u1', (h, w), 'valid').astype(bool)
    reader.finish()
    if not np.isfinite(colors).all():
        raise FormatError(f"{reader.name}: 유한하지 않은 색 값이 있습니다")
    return Texture(colors, filled, valid)
