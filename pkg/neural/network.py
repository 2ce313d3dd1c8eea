"""
역투영 네트워크

[구조]  (D = 64)
- 위치 인코딩 MLP   : 8 → 64 → 64  (rel_pos, rel_normal, n·v, δ)
- 외형 인코딩 MLP   : 3 → 64 → 64  (RGB, 빈 텍셀은 검정)
- 교차 어텐션 블록 3개 : q = (f_u + h_u) Q, k = (f_p + h_p) K, v = f_p V
                        a = softmax(q·k / √D), f_u' = Σ a v + f_u
- 디코더 MLP        : 64 → 64 → 3, 마지막에 sigmoid

행렬은 [입력, 출력] 모양으로 저장하고 x @ W 로 적용한다.
MLP 는 Linear → softplus → Linear (마지막 활성화 없음)
"""
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from neural.autodiff import Node, Tape
from utils.constants import (
    ACTIVATION_SOFTPLUS, APP_FEATURES, ATTENTION_BLOCKS, DECODER_OUTPUT_SCALE, FEATURE_DIM,
    HIDDEN_DIM, OUT_CHANNELS, POS_FEATURES, TEXEL_NDOTV_SENTINEL,
)
from utils.errors import EmptyNeighborhoodError, NumericError, UsageError
from utils.logger import logger


@dataclass(frozen=True)
class NetArch:
    """네트워크 구조 기술자 (가중치 파일 헤더에 기록)"""
    pos_in: int = POS_FEATURES
    app_in: int = APP_FEATURES
    dim: int = FEATURE_DIM
    hidden: int = HIDDEN_DIM
    blocks: int = ATTENTION_BLOCKS
    out: int = OUT_CHANNELS
    share_qkv: bool = False
    activation: int = ACTIVATION_SOFTPLUS

    def block_prefix(self, b: int) -> str:
        """블록 b (1부터) 의 텐서 이름 접두사 - 공유 모드는 모두 block1"""
        return 'block1' if self.share_qkv else f'block{b}'

    def tensor_shapes(self) -> 'OrderedDict[str, Tuple[int, ...]]':
        shapes = OrderedDict()
        for prefix, fan_in in (('pos', self.pos_in), ('app', self.app_in)):
            shapes[f'{prefix}.W1'] = (fan_in, self.hidden)
            shapes[f'{prefix}.b1'] = (self.hidden,)
            shapes[f'{prefix}.W2'] = (self.hidden, self.dim)
            shapes[f'{prefix}.b2'] = (self.dim,)
        for b in range(1, (1 if self.share_qkv else self.blocks) + 1):
            for m in ('Q', 'K', 'V'):
                shapes[f'block{b}.{m}'] = (self.dim, self.dim)
        shapes['dec.W1'] = (self.dim, self.hidden)
        shapes['dec.b1'] = (self.hidden,)
        shapes['dec.W2'] = (self.hidden, self.out)
        shapes['dec.b2'] = (self.out,)
        return shapes


class NetWeights:
    """이름 → 텐서 (모든 학습 파라미터)"""

    def __init__(self, arch: NetArch, tensors: Dict[str, np.ndarray]):
        self.arch = arch
        shapes = arch.tensor_shapes()
        missing = [n for n in shapes if n not in tensors]
        if missing:
            raise UsageError(f"가중치 텐서가 없습니다: {', '.join(missing)}")
        self.tensors: 'OrderedDict[str, np.ndarray]' = OrderedDict()
        for name, shape in shapes.items():
            value = np.asarray(tensors[name], dtype=np.float64)
            if value.shape != shape:
                raise UsageError(f"텐서 {name} 모양 {value.shape} != {shape}")
            self.tensors[name] = value

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors.items())

    def names(self) -> List[str]:
        return list(self.tensors)

    def copy(self) -> 'NetWeights':
        return NetWeights(self.arch, {k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> 'NetWeights':
        return NetWeights(self.arch, {k: np.zeros_like(v) for k, v in self.tensors.items()})

    def is_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.tensors.values())

    def parameter_count(self) -> int:
        return int(sum(v.size for v in self.tensors.values()))

    def equals(self, other: 'NetWeights') -> bool:
        """비트 단위 동일 여부"""
        return (self.arch == other.arch
                and all(np.array_equal(self[k], other[k]) for k in self.tensors))


# 기울기는 가중치와 같은 모양
Gradients = NetWeights


def init_weights(arch: NetArch = NetArch(), seed: int = 0) -> NetWeights:
    """Xavier 균등 초기화, 편향 0, 디코더 출력층은 0.1 배"""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in arch.tensor_shapes().items():
        if len(shape) == 1:
            tensors[name] = np.zeros(shape)
            continue
        limit = math.sqrt(6.0 / (shape[0] + shape[1]))
        tensors[name] = rng.uniform(-limit, limit, size=shape)
    tensors['dec.W2'] *= DECODER_OUTPUT_SCALE
    return NetWeights(arch, tensors)


def zero_weights(arch: NetArch = NetArch()) -> NetWeights:
    return NetWeights(arch, {n: np.zeros(s) for n, s in arch.tensor_shapes().items()})


@dataclass
class GeomFeatures:
    """픽셀의 상대 기하 특징 (절대 위치/법선은 포함하지 않음)"""
    rel_pos: np.ndarray
    rel_normal: np.ndarray
    ndotv: float
    geodesic: float

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.rel_pos, self.rel_normal, [self.ndotv, self.geodesic]])

    @classmethod
    def texel(cls) -> 'GeomFeatures':
        """텍셀 자신의 특징 - 0 벡터, n·v 는 정면 센티넬"""
        return cls(np.zeros(3), np.zeros(3), TEXEL_NDOTV_SENTINEL, 0.0)


def texel_feature_vector() -> np.ndarray:
    return GeomFeatures.texel().to_vector()


@dataclass
class PaddedBatch:
    """패딩된 배치 (B 텍셀 x N 최대 레코드)"""
    texel_feats: np.ndarray     # [B, 8]
    texel_color: np.ndarray     # [B, 3]
    rec_feats: np.ndarray       # [B, N, 8]
    rec_color: np.ndarray       # [B, N, 3]
    mask: np.ndarray            # [B, N] bool

    @property
    def size(self) -> int:
        return len(self.texel_color)


@dataclass
class ForwardTrace:
    output: Node
    attention: List[np.ndarray]      # 블록별 [B, N]
    texel_features: np.ndarray       # 마지막 f_u [B, D]


# ============================================================
# 순전파 (테이프 기반)
# ============================================================

def _mlp(tape: Tape, params: Dict[str, Node], prefix: str, x: Node) -> Node:
    h = tape.softplus(tape.add(tape.matmul(x, params[f'{prefix}.W1']), params[f'{prefix}.b1']))
    return tape.add(tape.matmul(h, params[f'{prefix}.W2']), params[f'{prefix}.b2'])


def _clamp_rgb(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    if (rgb < 0).any() or (rgb > 1).any():
        logger.warning("RGB 값이 [0, 1] 범위를 벗어나 잘라냈습니다")
        rgb = np.clip(rgb, 0.0, 1.0)
    return rgb


def forward_batch(w: NetWeights, batch: PaddedBatch, tape: Optional[Tape] = None,
                  dtype=np.float64) -> Tuple[ForwardTrace, Dict[str, Node]]:
    """배치 순전파

    Returns:
        (trace, 파라미터 노드 사전) - 파라미터 노드의 grad 가 역전파 결과
    """
    tape = tape if tape is not None else Tape(record=False)
    arch = w.arch
    params = {name: tape.leaf(value.astype(dtype, copy=False), name) for name, value in w}

    texel_feats = tape.leaf(batch.texel_feats.astype(dtype))
    rec_feats = tape.leaf(batch.rec_feats.astype(dtype))
    texel_color = tape.leaf(batch.texel_color.astype(dtype))
    rec_color = tape.leaf(batch.rec_color.astype(dtype))

    h_u = _mlp(tape, params, 'pos', texel_feats)
    h_p = _mlp(tape, params, 'pos', rec_feats)
    f_u = _mlp(tape, params, 'app', texel_color)
    f_p = _mlp(tape, params, 'app', rec_color)
    key_in = tape.add(f_p, h_p)
    inv_sqrt_d = 1.0 / math.sqrt(arch.dim)

    attention = []
    for b in range(1, arch.blocks + 1):
        prefix = arch.block_prefix(b)
        q = tape.matmul(tape.add(f_u, h_u), params[f'{prefix}.Q'])
        k = tape.matmul(key_in, params[f'{prefix}.K'])
        v = tape.matmul(f_p, params[f'{prefix}.V'])
        logits = tape.scale(tape.attention_logits(q, k), inv_sqrt_d)
        a = tape.masked_softmax(logits, batch.mask)
        attention.append(a.value)
        f_u = tape.add(tape.attention_sum(a, v), f_u)

    out = tape.sigmoid(_mlp(tape, params, 'dec', f_u))
    return ForwardTrace(out, attention, f_u.value), params


def loss_and_grads(w: NetWeights, batch: PaddedBatch, target: np.ndarray,
                   row_weights: Optional[np.ndarray] = None) -> Tuple[float, Gradients]:
    """L1 손실과 전체 파라미터 기울기 (float64)"""
    tape = Tape(record=True)
    trace, params = forward_batch(w, batch, tape)
    if row_weights is None:
        row_weights = np.full(batch.size, 1.0 / batch.size)
    loss = tape.l1_loss(trace.output, np.asarray(target, dtype=np.float64), row_weights)
    value = float(loss.value)
    if not math.isfinite(value):
        bad = np.nonzero(~np.isfinite(trace.output.value).all(axis=1))[0]
        raise NumericError(f"손실이 유한하지 않습니다 (배치 내 텍셀 {bad.tolist()[:10]})")
    tape.backward(loss)
    grads = {name: (node.grad if node.grad is not None else np.zeros_like(node.value))
             for name, node in params.items()}
    return value, NetWeights(w.arch, grads)


# ============================================================
# 배치 구성
# ============================================================

def pad_records(feats: Sequence[np.ndarray], colors: Sequence[np.ndarray]):
    """가변 길이 레코드 목록을 [B, N, *] 로 패딩"""
    n_max = max((len(f) for f in feats), default=0)
    n_max = max(n_max, 1)
    b = len(feats)
    rec_feats = np.zeros((b, n_max, POS_FEATURES))
    rec_color = np.zeros((b, n_max, 3))
    mask = np.zeros((b, n_max), dtype=bool)
    for i, (f, c) in enumerate(zip(feats, colors)):
        rec_feats[i, :len(f)] = f
        rec_color[i, :len(c)] = c
        mask[i, :len(f)] = True
    return rec_feats, rec_color, mask


def batch_from_gather(gathered, texels: np.ndarray, current_colors: np.ndarray) -> PaddedBatch:
    """GatherResult 의 텍셀 부분집합으로 배치 구성 (벡터화)

    Args:
        gathered: core.gather.GatherResult
        texels: 텍셀 번호 [B]
        current_colors: 텍셀별 현재 색 [B, 3] (빈 텍셀은 검정)
    """
    texels = np.asarray(texels, dtype=np.int64)
    counts = gathered.counts()[texels]
    b = len(texels)
    n_max = max(int(counts.max()) if b else 0, 1)
    mask = np.arange(n_max)[None, :] < counts[:, None]

    starts = gathered.offsets[texels]
    rec_idx = np.where(mask, starts[:, None] + np.arange(n_max)[None, :], 0)
    rec_feats = np.zeros((b, n_max, POS_FEATURES))
    rec_color = np.zeros((b, n_max, 3))
    if gathered.record_count:
        s_u = gathered.texel_position[texels][:, None, :]
        n_u = gathered.texel_normal[texels][:, None, :]
        rec_feats[..., 0:3] = gathered.position[rec_idx] - s_u
        rec_feats[..., 3:6] = gathered.normal[rec_idx] - n_u
        rec_feats[..., 6] = gathered.ndotv[rec_idx]
        rec_feats[..., 7] = gathered.geodesic[rec_idx]
        rec_color[:] = gathered.color[rec_idx]
        rec_feats[~mask] = 0.0
        rec_color[~mask] = 0.0

    texel_feats = np.tile(texel_feature_vector(), (b, 1))
    return PaddedBatch(texel_feats, np.clip(current_colors, 0.0, 1.0), rec_feats, rec_color, mask)


def batch_from_sets(sets: Sequence, current_colors: Sequence[Optional[np.ndarray]]) -> PaddedBatch:
    """NeighborSet 목록으로 배치 구성 - 각 set 은 텍셀 위치/법선을 가져야 한다"""
    feats, colors, texel_colors = [], [], []
    for ns, current in zip(sets, current_colors):
        if ns.is_empty:
            raise EmptyNeighborhoodError(f"텍셀 {ns.texel} 의 이웃이 비어 있습니다")
        feats.append(np.array([
            GeomFeatures(r.position - ns.position, r.normal - ns.normal, r.ndotv, r.geodesic).to_vector()
            for r in ns.records]))
        colors.append(np.array([r.color for r in ns.records]))
        texel_colors.append(np.zeros(3) if current is None else _clamp_rgb(current))
    rec_feats, rec_color, mask = pad_records(feats, colors)
    texel_feats = np.tile(texel_feature_vector(), (len(feats), 1))
    return PaddedBatch(texel_feats, np.array(texel_colors).reshape(-1, 3), rec_feats, rec_color, mask)


# ============================================================
# 단일 텍셀 인터페이스
# ============================================================

def encode_position(w: NetWeights, g) -> np.ndarray:
    """위치 인코딩 h (GeomFeatures 또는 길이 8 벡터)"""
    x = g.to_vector() if isinstance(g, GeomFeatures) else np.asarray(g, dtype=np.float64)
    tape = Tape(record=False)
    params = {n: tape.leaf(v) for n, v in w}
    return _mlp(tape, params, 'pos', tape.leaf(x[None])).value[0]


def encode_appearance(w: NetWeights, rgb) -> np.ndarray:
    """외형 인코딩 f (범위 밖 RGB 는 잘라내고 경고, None 은 검정)"""
    rgb = np.zeros(3) if rgb is None else _clamp_rgb(rgb)
    tape = Tape(record=False)
    params = {n: tape.leaf(v) for n, v in w}
    return _mlp(tape, params, 'app', tape.leaf(rgb[None])).value[0]


def attention_block(w: NetWeights, block: int, f_u: np.ndarray, h_u: np.ndarray,
                    records: Sequence[Tuple[np.ndarray, np.ndarray]],
                    return_weights: bool = False):
    """교차 어텐션 블록 하나 (텍셀 = 질의, 픽셀 = 키)"""
    if not records:
        raise EmptyNeighborhoodError("어텐션 블록에 레코드가 없습니다")
    prefix = w.arch.block_prefix(block)
    f_p = np.array([r[0] for r in records])
    h_p = np.array([r[1] for r in records])
    q = (f_u + h_u) @ w[f'{prefix}.Q']
    k = (f_p + h_p) @ w[f'{prefix}.K']
    v = f_p @ w[f'{prefix}.V']
    logits = k @ q / math.sqrt(w.arch.dim)
    logits -= logits.max()
    a = np.exp(logits)
    a /= a.sum()
    out = a @ v + f_u
    return (out, a) if return_weights else out


def forward(w: NetWeights, ns, current_color=None) -> np.ndarray:
    """NeighborSet 하나의 예측 색 [0, 1]^3"""
    batch = batch_from_sets([ns], [current_color])
    trace, _ = forward_batch(w, batch)
    return trace.output.value[0]


def backward(w: NetWeights, batch: Sequence[Tuple]) -> Tuple[float, Gradients]:
    """[(NeighborSet, current_color, target)] 배치의 평균 L1 손실과 기울기"""
    if not batch:
        raise UsageError("빈 배치입니다")
    sets = [item[0] for item in batch]
    currents = [item[1] for item in batch]
    targets = np.array([item[2] for item in batch], dtype=np.float64)
    padded = batch_from_sets(sets, currents)
    try:
        return loss_and_grads(w, padded, targets)
    except NumericError as e:
        texels = [ns.texel for ns in sets]
        raise NumericError(f"{e} - 텍셀 좌표 {texels[:10]}")


def predict_gather(w: NetWeights, gathered, texels: np.ndarray, current_colors: np.ndarray,
                   batch_size: int = 256, dtype=np.float64) -> np.ndarray:
    """여러 텍셀 예측 (빈 이웃 텍셀은 호출 전에 걸러야 함)"""
    out = np.zeros((len(texels), 3))
    for lo in range(0, len(texels), batch_size):
        sel = slice(lo, lo + batch_size)
        batch = batch_from_gather(gathered, texels[sel], current_colors[sel])
        trace, _ = forward_batch(w, batch, dtype=dtype)
        out[sel] = trace.output.value
    return out
