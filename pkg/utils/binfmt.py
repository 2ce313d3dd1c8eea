"""
리틀 엔디언 바이너리 컨테이너 헬퍼

STXM / STXG / STXD / STXW / STXT 파일이 공통으로 사용
[구조] magic(4) + u32 version + 포맷별 본문
"""
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from utils.constants import FORMAT_VERSION
from utils.errors import FormatError


class BinaryWriter:
    """바이트 버퍼에 순차 기록"""

    def __init__(self, magic: bytes, version: int = FORMAT_VERSION):
        self._chunks = [magic, struct.pack('<I', version)]

    def u8(self, value: int):
        self._chunks.append(struct.pack('<B', value))

    def u32(self, value: int):
        self._chunks.append(struct.pack('<I', value))

    def f64(self, value: float):
        self._chunks.append(struct.pack('<d', value))

    def text(self, value: str):
        """u32 길이 + UTF-8 문자열"""
        raw = value.encode('utf-8')
        self.u32(len(raw))
        self._chunks.append(raw)

    def array(self, values: np.ndarray, dtype: str):
        """배열을 주어진 리틀 엔디언 dtype으로 기록 (길이 정보 없음)"""
        self._chunks.append(np.ascontiguousarray(values, dtype=dtype).tobytes())

    def to_bytes(self) -> bytes:
        return b''.join(self._chunks)

    def save(self, path: Union[str, Path]):
        Path(path).write_bytes(self.to_bytes())


class BinaryReader:
    """바이트 버퍼 순차 읽기 - 길이가 모자라면 FormatError"""

    def __init__(self, data: bytes, magic: bytes, name: str = ''):
        self.data = data
        self.pos = 0
        self.name = name or magic.decode('ascii', 'replace')
        head = self._take(4, 'magic')
        if head != magic:
            raise FormatError(f"{self.name}: 잘못된 매직 {head!r} (기대값 {magic!r})")
        self.version = self.u32('version')

    @classmethod
    def open(cls, path: Union[str, Path], magic: bytes) -> 'BinaryReader':
        path = Path(path)
        if not path.exists():
            raise FormatError(f"파일이 없습니다: {path}")
        return cls(path.read_bytes(), magic, name=path.name)

    def expect_version(self, version: int = FORMAT_VERSION):
        if self.version != version:
            raise FormatError(
                f"{self.name}: 지원하지 않는 버전 {self.version} (기대값 {version})")

    def _take(self, size: int, what: str) -> bytes:
        end = self.pos + size
        if end > len(self.data):
            raise FormatError(f"{self.name}: '{what}' 읽는 중 파일이 잘렸습니다")
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def u8(self, what: str = 'u8') -> int:
        return struct.unpack('<B', self._take(1, what))[0]

    def u32(self, what: str = 'u32') -> int:
        return struct.unpack('<I', self._take(4, what))[0]

    def f64(self, what: str = 'f64') -> float:
        return struct.unpack('<d', self._take(8, what))[0]

    def text(self, what: str = 'text') -> str:
        size = self.u32(what)
        return self._take(size, what).decode('utf-8')

    def array(self, dtype: str, shape: Tuple[int, ...], what: str = 'array') -> np.ndarray:
        count = int(np.prod(shape)) if shape else 1
        item = np.dtype(dtype).itemsize
        raw = self._take(count * item, what)
        return np.frombuffer(raw, dtype=dtype).reshape(shape).copy()

    def records(self, dtype: np.dtype, count: int, what: str = 'records') -> np.ndarray:
        """구조화 레코드 배열 읽기"""
        raw = self._take(count * dtype.itemsize, what)
        return np.frombuffer(raw, dtype=dtype, count=count).copy()

    def finish(self):
        """남은 바이트가 있으면 형식 오류"""
        if self.pos != len(self.data):
            raise FormatError(f"{self.name}: 파일 끝에 {len(self.data) - self.pos}바이트가 남았습니다")
