"""
역전파 테이프 (Wengert list)

역투영 네트워크에 필요한 연산만 지원한다.
- matmul, add, scale, softplus, sigmoid
- masked_softmax, attention_logits, attention_sum
- l1_loss (0 에서의 부분기울기 = 0)

각 연산은 Node 를 만들고 테이프에 순서대로 기록한다.
backward 는 테이프를 역순으로 훑으며 기울기를 부모에게 누적한다.
"""
from typing import Callable, List, Optional

import numpy as np


class Node:
    """테이프 위의 값 하나"""
    __slots__ = ('value', 'grad', '_backward', 'name')

    def __init__(self, value: np.ndarray, backward: Optional[Callable] = None, name: str = ''):
        self.value = value
        self.grad: Optional[np.ndarray] = None
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, grad: np.ndarray):
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.value.dtype, copy=True)
        else:
            self.grad += grad


class Tape:
    """연산 기록 테이프"""

    def __init__(self, record: bool = True):
        self.record = record
        self.nodes: List[Node] = []

    def leaf(self, value: np.ndarray, name: str = '') -> Node:
        node = Node(np.asarray(value), None, name)
        if self.record:
            self.nodes.append(node)
        return node

    def _push(self, value: np.ndarray, backward: Callable) -> Node:
        node = Node(value, backward if self.record else None)
        if self.record:
            self.nodes.append(node)
        return node

    def backward(self, output: Node):
        """output (스칼라) 에서 역전파"""
        if not self.record:
            raise RuntimeError("기록하지 않는 테이프에서는 역전파할 수 없습니다")
        output.grad = np.ones_like(output.value)
        for node in reversed(self.nodes):
            if node.grad is not None and node._backward is not None:
                node._backward(node.grad)

    # ========================================================
    # 연산
    # ========================================================

    def matmul(self, x: Node, w: Node) -> Node:
        """x[..., a] @ w[a, b]"""
        out = x.value @ w.value

        def backward(g):
            x.accumulate(g @ w.value.T)
            a, b = w.value.shape
            w.accumulate(x.value.reshape(-1, a).T @ g.reshape(-1, b))
        return self._push(out, backward)

    def add(self, x: Node, y: Node) -> Node:
        """브로드캐스트 덧셈"""
        out = x.value + y.value

        def backward(g):
            x.accumulate(_unbroadcast(g, x.value.shape))
            y.accumulate(_unbroadcast(g, y.value.shape))
        return self._push(out, backward)

    def scale(self, x: Node, factor: float) -> Node:
        out = x.value * factor

        def backward(g):
            x.accumulate(g * factor)
        return self._push(out, backward)

    def softplus(self, x: Node) -> Node:
        out = np.logaddexp(0.0, x.value)

        def backward(g):
            x.accumulate(g * _sigmoid(x.value))
        return self._push(out, backward)

    def sigmoid(self, x: Node) -> Node:
        out = _sigmoid(x.value)

        def backward(g):
            x.accumulate(g * out * (1.0 - out))
        return self._push(out, backward)

    def attention_logits(self, q: Node, k: Node) -> Node:
        """q[B, D], k[B, N, D] → [B, N]"""
        out = np.einsum('bd,bnd->bn', q.value, k.value)

        def backward(g):
            q.accumulate(np.einsum('bn,bnd->bd', g, k.value))
            k.accumulate(g[:, :, None] * q.value[:, None, :])
        return self._push(out, backward)

    def masked_softmax(self, logits: Node, mask: np.ndarray) -> Node:
        """마지막 축 softmax, mask=False 항목은 가중치 0"""
        z = np.where(mask, logits.value, -np.inf)
        top = np.max(z, axis=-1, keepdims=True)
        top = np.where(np.isfinite(top), top, 0.0)
        e = np.where(mask, np.exp(z - top), 0.0)
        total = e.sum(axis=-1, keepdims=True)
        total = np.where(total > 0, total, 1.0)
        out = e / total

        def backward(g):
            inner = (g * out).sum(axis=-1, keepdims=True)
            logits.accumulate(out * (g - inner))
        return self._push(out, backward)

    def attention_sum(self, a: Node, v: Node) -> Node:
        """a[B, N], v[B, N, D] → Σ_n a v  [B, D]"""
        out = np.einsum('bn,bnd->bd', a.value, v.value)

        def backward(g):
            a.accumulate(np.einsum('bd,bnd->bn', g, v.value))
            v.accumulate(a.value[:, :, None] * g[:, None, :])
        return self._push(out, backward)

    def l1_loss(self, pred: Node, target: np.ndarray, row_weights: np.ndarray) -> Node:
        """Σ_b w_b · mean_c |pred - target|  (Σ w_b = 1 이면 평균 L1)"""
        diff = pred.value - target
        channels = diff.shape[-1]
        out = np.array(np.sum(row_weights * np.abs(diff).sum(axis=-1)) / channels)

        def backward(g):
            pred.accumulate(g * np.sign(diff) * row_weights[:, None] / channels)
        return self._push(out, backward)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """브로드캐스트된 축을 합쳐 원래 모양으로"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad
