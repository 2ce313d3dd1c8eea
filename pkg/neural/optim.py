"""
Adam 최적화기

m(t) = b1 m(t-1) + (1 - b1) g
v(t) = b2 v(t-1) + (1 - b2) g^2
θ(t) = θ(t-1) - lr · m̂ / (sqrt(v̂) + eps)
"""
from typing import Dict

import numpy as np

from neural.network import Gradients, NetWeights
from utils.constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON, DEFAULT_LEARNING_RATE
from utils.errors import UsageError


class Adam:
    """가중치 텐서별 1차/2차 모멘트를 유지하는 단일 작성자 최적화기"""

    def __init__(self, weights: NetWeights, lr: float = DEFAULT_LEARNING_RATE,
                 beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2, eps: float = ADAM_EPSILON):
        if lr < 0:
            raise UsageError(f"학습률은 0 이상이어야 합니다: {lr}")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise UsageError(f"모멘트 계수는 [0, 1) 범위여야 합니다: {beta1}, {beta2}")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Dict[str, np.ndarray] = {n: np.zeros_like(v) for n, v in weights}
        self.v: Dict[str, np.ndarray] = {n: np.zeros_like(v) for n, v in weights}

    def step(self, weights: NetWeights, grads: Gradients) -> NetWeights:
        """갱신된 새 가중치 반환 (입력 가중치는 그대로)"""
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        updated = {}
        for name, value in weights:
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            if self.lr == 0.0:
                updated[name] = value.copy()
                continue
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            updated[name] = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return NetWeights(weights.arch, updated)

    def state_dict(self) -> dict:
        return {'t': self.t, 'lr': self.lr, 'beta1': self.beta1, 'beta2': self.beta2, 'eps': self.eps}
