"""
가중치 파일 (STXW)

[구조] 모두 리틀 엔디언
- magic 'STXW', u32 version
- 구조 기술자: u32 pos_in, app_in, dim, hidden, blocks, out, u8 share_qkv, u8 activation
- u32 텐서 수, 텐서마다: 이름(u32 길이 + UTF-8), u32 ndim, u32 shape[ndim], f64 값
"""
from pathlib import Path
from typing import Union

import numpy as np

from neural.network import NetArch, NetWeights
from utils.binfmt import BinaryReader, BinaryWriter
from utils.constants import WEIGHTS_MAGIC
from utils.errors import FormatError
from utils.logger import logger


def weights_to_bytes(w: NetWeights) -> bytes:
    writer = BinaryWriter(WEIGHTS_MAGIC)
    arch = w.arch
    for value in (arch.pos_in, arch.app_in, arch.dim, arch.hidden, arch.blocks, arch.out):
        writer.u32(value)
    writer.u8(int(arch.share_qkv))
    writer.u8(arch.activation)
    writer.u32(len(w.tensors))
    for name, value in w:
        writer.text(name)
        writer.u32(value.ndim)
        for dim in value.shape:
            writer.u32(dim)
        writer.array(value, '<f8')
    return writer.to_bytes()


def weights_from_bytes(data: bytes, name: str = 'STXW') -> NetWeights:
    reader = BinaryReader(data, WEIGHTS_MAGIC, name)
    reader.expect_version()
    sizes = [reader.u32(field) for field in ('pos_in', 'app_in', 'dim', 'hidden', 'blocks', 'out')]
    share = bool(reader.u8('share_qkv'))
    activation = reader.u8('activation')
    arch = NetArch(*sizes, share_qkv=share, activation=activation)

    expected = arch.tensor_shapes()
    count = reader.u32('tensor count')
    if count != len(expected):
        raise FormatError(f"{reader.name}: 텐서 수 {count} != {len(expected)}")

    tensors = {}
    for _ in range(count):
        tensor_name = reader.text('tensor name')
        ndim = reader.u32(f'{tensor_name} ndim')
        shape = tuple(reader.u32(f'{tensor_name} shape') for _ in range(ndim))
        if expected.get(tensor_name) != shape:
            raise FormatError(f"{reader.name}: 텐서 '{tensor_name}' 의 이름 또는 모양 {shape} 이 구조와 맞지 않습니다")
        value = reader.array('<f8', shape, tensor_name)
        if not np.isfinite(value).all():
            raise FormatError(f"{reader.name}: 텐서 '{tensor_name}' 에 유한하지 않은 값이 있습니다")
        tensors[tensor_name] = value.astype(np.float64)
    reader.finish()
    return NetWeights(arch, tensors)


def save_weights(w: NetWeights, path: Union[str, Path]):
    if not w.is_finite():
        logger.warning(f"유한하지 않은 값이 있는 가중치를 저장합니다: {path}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(weights_to_bytes(w))
    logger.debug(f"가중치 저장: {path}")


def load_weights(path: Union[str, Path]) -> NetWeights:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"가중치 파일이 없습니다: {path}")
    return weights_from_bytes(path.read_bytes(), path.name)
