"""
PNG 입출력 (Pillow)

이미지 배열 규약: float64 [H, W, 3], 값 범위 [0, 1], 0행이 이미지 상단
"""
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from PIL import Image

from utils.errors import FormatError


def to_uint8(image: np.ndarray) -> np.ndarray:
    """[0,1] 실수 이미지를 8비트로 변환 (반올림)"""
    return np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def save_rgb(path: Union[str, Path], image: np.ndarray, mask: Optional[np.ndarray] = None):
    """RGB PNG 저장 (mask가 있으면 알파 채널로 기록)"""
    data = to_uint8(image)
    if mask is not None:
        alpha = np.where(mask, 255, 0).astype(np.uint8)[..., None]
        Image.fromarray(np.concatenate([data, alpha], axis=2)).save(str(path))
    else:
        Image.fromarray(data).save(str(path))


def save_gray(path: Union[str, Path], values: np.ndarray):
    """8비트 회색조 PNG 저장 (값 범위 0~255)"""
    data = np.clip(np.rint(values), 0, 255).astype(np.uint8)
    Image.fromarray(data).save(str(path))


def save_mask(path: Union[str, Path], mask: np.ndarray):
    """불리언 마스크를 흑백 PNG로 저장"""
    save_gray(path, np.where(mask, 255, 0))


def load_rgb(path: Union[str, Path]) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """PNG 읽기

    Returns:
        (image [H,W,3] float64, alpha 마스크 또는 None)
    """
    path = Path(path)
    if not path.exists():
        raise FormatError(f"이미지 파일이 없습니다: {path}")
    try:
        with Image.open(path) as img:
            has_alpha = img.mode in ('RGBA', 'LA') or 'transparency' in img.info
            rgba = np.asarray(img.convert('RGBA'), dtype=np.float64)
    except OSError as e:
        raise FormatError(f"이미지를 읽을 수 없습니다: {path} ({e})")
    image = rgba[..., :3] / 255.0
    alpha = rgba[..., 3] > 127 if has_alpha else None
    return image, alpha


def load_mask(path: Union[str, Path]) -> np.ndarray:
    """흑백 PNG를 불리언 마스크로 읽기"""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"마스크 파일이 없습니다: {path}")
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert('L')) > 127
    except OSError as e:
        raise FormatError(f"마스크를 읽을 수 없습니다: {path} ({e})")
